"""Command-line surface.

Subcommands: ``dataset``, ``train``, ``eval``, ``sound``, ``estimate``,
``simulate``.  Each takes a JSON config file (defaults shown by
``--print-config``), a ``--seed`` override, and writes its outputs plus a
manifest recording the fully resolved configuration, output paths and stage
timings; re-running a subcommand with the manifest's config snapshot
reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import pipeline, profiles
from .bem import estimate_cir_windowed
from .features import N_SCENARIOS
from .mlp import TrainConfig, config_fingerprint, init_mlp, load_mlp, save_mlp, train
from .mseq import generate_mseq
from .pipeline import DatasetSpec
from .simulate import ComplexSignal, SimConfig, generate_fading
from .sounding import DelayAmplitudeEstimate, OrderEstimate

SIGNAL_FORMAT = "chanident-signal v1"
TRACE_FORMAT = "chanident-trace v1"
MANIFEST_FORMAT = "chanident-manifest v1"

DEFAULTS: dict[str, dict] = {
    "dataset": DatasetSpec().to_dict(),
    "train": {
        "hidden_sizes": [64, 48, 32, 24],
        "init_seed": 0,
        "learning_rate": 0.01,
        "momentum": 0.9,
        "epochs": 2000,
        "batch_size": 32,
        "seed": 0,
        "plateau_patience": 100,
        "plateau_rel_tol": 1e-4,
    },
    "eval": {},
    "sound": {
        "register_length": 8,
        "feedback_taps": None,   # null -> registry default for the register length
        "initial_state": None,   # null -> all ones
        "threshold_factor": 0.05,
        "max_candidate_delay": None,  # null -> whole period
        "normalized_doppler": None,   # used only for the quasi-static warning
    },
    "estimate": {
        "delay_grid": list(range(profiles.MAX_DELAY_UNITS)),
        "normalized_doppler": 0.004,
        "window_len": 512,
    },
    "simulate": {
        "label": 1,
        "n_samples": 4096,
        "symbol_rate_hz": 1e5,
        "normalized_doppler": 0.004,
        "samples_per_symbol": 1,
        "seed": 0,
    },
}


class CliError(Exception):
    """Fatal CLI problem; message goes to stderr, exit status 1."""


def _load_config(subcommand: str, path: str | None) -> dict:
    resolved = json.loads(json.dumps(DEFAULTS[subcommand]))  # deep copy
    if path is None:
        return resolved
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(user, dict):
        raise CliError(f"config file {path}: top level must be a JSON object")
    for key, value in user.items():
        if key not in resolved and subcommand != "eval":
            raise CliError(f"config file {path}: unknown key {key!r} for {subcommand!r}")
        if key == "sim" and isinstance(resolved.get(key), dict) and isinstance(value, dict):
            for sk, sv in value.items():
                if sk not in resolved[key]:
                    raise CliError(f"config file {path}: unknown key sim.{sk!r}")
                resolved[key][sk] = sv
        else:
            resolved[key] = value
    return resolved


def write_signal_file(path, signal: ComplexSignal) -> None:
    with open(path, "w") as fh:
        rate = 1.0 / signal.sample_period_s
        fh.write(f"# {SIGNAL_FORMAT} sample_rate_hz={rate!r} count={len(signal)}\n")
        for z in signal.samples:
            fh.write(f"{float(z.real)!r} {float(z.imag)!r}\n")


def read_signal_file(path) -> ComplexSignal:
    """Parse a signal file; errors carry the byte offset of the bad line."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read signal file {path}: {exc}") from exc
    offset = 0
    lines = data.split(b"\n")
    header = lines[0].decode("utf-8", "replace") if lines else ""
    if not header.startswith(f"# {SIGNAL_FORMAT}"):
        raise CliError(f"{path}: byte 0: missing '{SIGNAL_FORMAT}' header")
    try:
        fields = dict(f.split("=", 1) for f in header.split()[3:])
        rate = float(fields["sample_rate_hz"])
        count = int(fields["count"])
    except (KeyError, ValueError, IndexError):
        raise CliError(f"{path}: byte 0: malformed signal header {header!r}") from None
    offset = len(lines[0]) + 1
    samples = []
    for raw in lines[1:]:
        line = raw.decode("utf-8", "replace").strip()
        if line:
            parts = line.split()
            try:
                if len(parts) != 2:
                    raise ValueError("expected two decimals")
                samples.append(complex(float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise CliError(f"{path}: byte {offset}: {exc}: {line!r}") from None
        offset += len(raw) + 1
    if len(samples) != count:
        raise CliError(
            f"{path}: byte {offset - 1}: truncated signal file: header promises "
            f"{count} samples, found {len(samples)}")
    return ComplexSignal(np.array(samples), 1.0 / rate)


def _write_manifest(path, subcommand, config_path, config, outputs, timings) -> None:
    doc = {
        "format": MANIFEST_FORMAT,
        "subcommand": subcommand,
        "config_path": config_path,
        "config": config,
        "outputs": outputs,
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_dataset(args) -> int:
    config = _load_config("dataset", args.config)
    if args.seed is not None:
        config["master_seed"] = args.seed
    if args.print_config:
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.output is None:
        raise CliError("dataset: --output is required")
    spec = DatasetSpec.from_dict(config)
    timings = {}
    t0 = time.perf_counter()
    records = pipeline.generate_records(spec, threads=args.threads)
    timings["generate"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    pipeline.write_dataset(args.output, spec, records)
    timings["write"] = time.perf_counter() - t0
    _write_manifest(args.output + ".manifest.json", "dataset", args.config,
                    spec.to_dict(), [args.output], timings)
    print(f"wrote {len(records)} records to {args.output}")
    return 0


def _cmd_train(args) -> int:
    config = _load_config("train", args.config)
    if args.seed is not None:
        config["seed"] = args.seed
        config["init_seed"] = args.seed
    if args.print_config:
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.dataset is None or args.output is None:
        raise CliError("train: --dataset and --output are required")
    timings = {}
    t0 = time.perf_counter()
    try:
        _, records = pipeline.read_dataset(args.dataset)
    except OSError as exc:
        raise CliError(f"cannot read dataset {args.dataset}: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    timings["read"] = time.perf_counter() - t0
    train_records, _ = pipeline.split_train_test(records)
    from .features import FEATURE_LENGTH, one_hot

    x = np.stack([r.feature.values for r in train_records])
    t = np.stack([one_hot(r.label) for r in train_records])
    sizes = [FEATURE_LENGTH] + list(config["hidden_sizes"]) + [N_SCENARIOS]
    tc = TrainConfig(
        learning_rate=config["learning_rate"], momentum=config["momentum"],
        epochs=config["epochs"], batch_size=config["batch_size"],
        seed=config["seed"], plateau_patience=config["plateau_patience"],
        plateau_rel_tol=config["plateau_rel_tol"])
    t0 = time.perf_counter()
    params = init_mlp(sizes, seed=config["init_seed"])
    params, report = train(params, x, t, tc)
    timings["train"] = time.perf_counter() - t0
    fingerprint = config_fingerprint(tc, extra={"init_seed": config["init_seed"],
                                                "layer_sizes": sizes})
    save_mlp(params, args.output, fingerprint)
    manifest_cfg = dict(config)
    _write_manifest(args.output + ".manifest.json", "train", args.config, manifest_cfg,
                    [args.output],
                    {**timings, "epochs_run": len(report.epoch_losses)})
    print(f"trained on {len(x)} noiseless vectors, "
          f"{len(report.epoch_losses)} epochs, final training accuracy "
          f"{report.final_accuracy:.3f}")
    return 0


def _cmd_eval(args) -> int:
    config = _load_config("eval", args.config)
    if args.print_config:
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.model is None or args.dataset is None or args.output is None:
        raise CliError("eval: --model, --dataset and --output are required")
    try:
        params, _ = load_mlp(args.model)
    except OSError as exc:
        raise CliError(f"cannot read model {args.model}: {exc}") from exc
    try:
        _, records = pipeline.read_dataset(args.dataset)
    except OSError as exc:
        raise CliError(f"cannot read dataset {args.dataset}: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    from .features import FEATURE_LENGTH

    if params.layer_sizes[0] != FEATURE_LENGTH or params.layer_sizes[-1] != N_SCENARIOS:
        raise CliError(
            f"model dims {params.layer_sizes[0]}->{params.layer_sizes[-1]} incompatible "
            f"with dataset features {FEATURE_LENGTH}->{N_SCENARIOS}")
    timings = {}
    t0 = time.perf_counter()
    _, test = pipeline.split_train_test(records)
    report = pipeline.evaluate(params, test)
    timings["evaluate"] = time.perf_counter() - t0
    pipeline.write_report(args.output, report)
    _write_manifest(args.output + ".manifest.json", "eval", args.config, config,
                    [args.output], timings)
    snrs = list(report.per_snr_accuracy)
    print("SNR/dB   " + "  ".join(f"{s:>6g}" for s in snrs) + "     Avg")
    print("Acc/%    " + "  ".join(f"{100 * report.per_snr_accuracy[s]:>6.1f}" for s in snrs)
          + f"  {100 * report.average_accuracy:>6.1f}")
    return 0


def _cmd_sound(args) -> int:
    config = _load_config("sound", args.config)
    if args.print_config:
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.signal is None:
        raise CliError("sound: --signal is required")
    received = read_signal_file(args.signal)
    taps = config["feedback_taps"]
    mseq = generate_mseq(config["register_length"],
                         tuple(taps) if taps else None,
                         config["initial_state"],
                         chip_period_s=received.sample_period_s)
    cand_max = config["max_candidate_delay"]
    cand = range(mseq.period if cand_max is None else int(cand_max) + 1)
    order_est, delays = pipeline.sound_and_profile(
        received, mseq, threshold_factor=config["threshold_factor"],
        candidate_delays=cand, normalized_doppler=config["normalized_doppler"])
    _print_sounding(received, order_est, delays)
    if args.output:
        _write_sounding(args.output, order_est, delays, received.sample_period_s)
        _write_manifest(args.output + ".manifest.json", "sound", args.config, config,
                        [args.output], {})
    return 0


def _print_sounding(received: ComplexSignal, order_est: OrderEstimate,
                    delays: DelayAmplitudeEstimate) -> None:
    unit_us = received.sample_period_s * 1e6
    print(f"estimated channel order: {order_est.order}")
    print("delay_units  delay_us  |amplitude|  phase_deg")
    for d, a in delays.paths:
        print(f"{d:>11d}  {d * unit_us:>8.1f}  {abs(a):>11.4f}  {np.degrees(np.angle(a)):>9.1f}")
    print(f"residual cost {delays.residual_cost:.6g} after {delays.iterations} sweeps")


def _write_sounding(path, order_est: OrderEstimate, delays: DelayAmplitudeEstimate,
                    sample_period_s: float) -> None:
    doc = {
        "format": "chanident-sounding v1",
        "order": order_est.order,
        "peak_lags": list(order_est.peak_lags),
        "peak_values": list(order_est.peak_values),
        "threshold": order_est.threshold,
        "paths": [{"delay_units": d, "delay_us": d * sample_period_s * 1e6,
                   "amplitude_re": a.real, "amplitude_im": a.imag}
                  for d, a in delays.paths],
        "residual_cost": delays.residual_cost,
        "iterations": delays.iterations,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_estimate(args) -> int:
    config = _load_config("estimate", args.config)
    if args.print_config:
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.signal is None or args.frame is None or args.output is None:
        raise CliError("estimate: --signal, --frame and --output are required")
    received = read_signal_file(args.signal)
    frame = read_signal_file(args.frame)
    if len(frame) != len(received):
        raise CliError(f"frame length {len(frame)} != received length {len(received)}")
    cir = estimate_cir_windowed(received, frame.samples, config["delay_grid"],
                                config["normalized_doppler"], config["window_len"])
    with open(args.output, "w") as fh:
        fh.write(f"# {TRACE_FORMAT} taps={len(cir.delay_grid)} count={cir.n_samples} "
                 f"delay_units={','.join(str(d) for d in cir.delay_grid)}\n")
        for n in range(cir.n_samples):
            row = cir.gains[:, n]
            fh.write(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row) + "\n")
    _write_manifest(args.output + ".manifest.json", "estimate", args.config, config,
                    [args.output], {})
    print(f"wrote {len(cir.delay_grid)} x {cir.n_samples} gain estimates to {args.output}")
    return 0


def _cmd_simulate(args) -> int:
    config = _load_config("simulate", args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.print_config:
        print(json.dumps(config, indent=2, sort_keys=True))
        return 0
    if args.output is None:
        raise CliError("simulate: --output is required")
    profile = profiles.load_profile(config["label"])
    sim = SimConfig(symbol_rate_hz=config["symbol_rate_hz"],
                    normalized_doppler=config["normalized_doppler"],
                    samples_per_symbol=config["samples_per_symbol"],
                    seed=config["seed"])
    cir = generate_fading(profile, config["n_samples"], sim)
    with open(args.output, "w") as fh:
        fh.write(f"# {TRACE_FORMAT} taps={cir.tap_count} count={cir.n_samples} "
                 f"delay_units={','.join(str(d) for d in cir.delay_units)}\n")
        for n in range(cir.n_samples):
            row = cir.gains[:, n]
            fh.write(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row) + "\n")
    _write_manifest(args.output + ".manifest.json", "simulate", args.config, config,
                    [args.output], {})
    print(f"wrote {cir.tap_count}-tap fading trace ({cir.n_samples} samples) to {args.output}")
    return 0


_COMMANDS = {
    "dataset": _cmd_dataset,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sound": _cmd_sound,
    "estimate": _cmd_estimate,
    "simulate": _cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanident",
        description="Multipath channel scenario identification toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in [
        ("dataset", "generate a feature dataset"),
        ("train", "train the scenario classifier on noiseless records"),
        ("eval", "evaluate a trained classifier per SNR"),
        ("sound", "estimate channel order, delays and amplitudes from a probe"),
        ("estimate", "BEM-LS gain estimation on a received signal"),
        ("simulate", "emit fading gain traces for one scenario"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config's seed")
        p.add_argument("--threads", type=int, default=1, help="worker process cap")
        p.add_argument("--output", help="primary output path")
        p.add_argument("--print-config", action="store_true",
                       help="print the resolved config and exit")
        if name in ("train", "eval"):
            p.add_argument("--dataset", help="dataset file")
        if name == "eval":
            p.add_argument("--model", help="model file")
        if name in ("sound", "estimate"):
            p.add_argument("--signal", help="received signal file")
        if name == "estimate":
            p.add_argument("--frame", help="known transmitted frame (signal file)")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except CliError as exc:
        print(f"chanident {args.subcommand}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"chanident {args.subcommand}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
