"""Basis-expansion least-squares estimation of time-varying tap gains.

Each tap's gain trajectory over a window is modelled as a coefficient mix of
Slepian sequences whose band matches the Doppler spread; the coefficients of
all (delay, basis-order) pairs are solved jointly from the received samples
at the observation positions.  Long frames are fitted window by window with
independent coefficient sets and the reconstructions concatenated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IdentifiabilityError
from .modulation import PilotPattern
from .simulate import ComplexSignal
from .slepian import DPSSBasis, basis_dimension, generate_dpss

DEFAULT_WINDOW_LEN = 512


@dataclass(frozen=True)
class BEMCoefficients:
    """Per-tap basis coefficients: ``coeffs[l, d]``."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if coeffs.ndim != 2:
            raise ValueError("coeffs must be an L x D matrix")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class CIREstimate:
    """Tap-gain series on a fixed delay grid; ``source`` records whether the
    gains are simulator ground truth or a BEM-LS fit."""

    gains: np.ndarray
    delay_grid: tuple[int, ...]
    source: str  # "true-sim" | "bem-ls"

    def __post_init__(self):
        gains = np.array(self.gains, dtype=np.complex128, copy=True)
        if gains.ndim != 2 or gains.shape[0] != len(self.delay_grid):
            raise ValueError("gains must have one row per delay-grid entry")
        if not np.all(np.isfinite(gains.view(np.float64))):
            raise ValueError("gains must be finite")
        gains.flags.writeable = False
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delay_grid", tuple(int(d) for d in self.delay_grid))

    @property
    def n_samples(self) -> int:
        return self.gains.shape[1]


def _shifted_frame(frame: np.ndarray, delays, start: int, stop: int) -> np.ndarray:
    """Columns x[n - tau] for n in [start, stop), zeros before the frame."""
    out = np.zeros((stop - start, len(delays)), dtype=np.complex128)
    for j, d in enumerate(delays):
        lo, hi = start - d, stop - d
        src_lo, src_hi = max(lo, 0), max(hi, 0)
        out[src_lo - lo:src_hi - lo, j] = frame[src_lo:src_hi]
    return out


def bem_ls_estimate(received: ComplexSignal, pilots: PilotPattern,
                    delay_grid, basis: DPSSBasis) -> tuple[BEMCoefficients, CIREstimate]:
    """Least-squares fit of basis coefficients from the observed samples.

    The model at observation position n is
    y[n] = sum_l sum_d c[l, d] * u_d[n] * x[n - tau_l]; the reconstruction
    mu_l[n] = sum_d c[l, d] u_d[n] covers every n in the window regardless
    of which positions were observed.
    """
    delays = tuple(int(d) for d in delay_grid)
    if len(set(delays)) != len(delays):
        raise ValueError("delay_grid entries must be unique")
    n = len(received)
    if basis.length != n:
        raise ValueError(f"basis length {basis.length} != received length {n}")
    n_unknown = len(delays) * basis.count
    pos = pilots.positions
    if len(pos) < n_unknown:
        raise IdentifiabilityError(
            f"{len(pos)} observations cannot identify {len(delays)} delays x "
            f"{basis.count} basis terms = {n_unknown} unknowns")
    if len(pilots.symbols) != n:
        raise ValueError(f"frame length {len(pilots.symbols)} != received length {n}")
    shifts = _shifted_frame(pilots.symbols, delays, 0, n)  # (n, L)
    u = basis.sequences  # (D, n)
    # A[i, l*D + d] = u_d[pos_i] * x[pos_i - tau_l]
    a = (shifts[pos, :, None] * u.T[pos, None, :]).reshape(len(pos), n_unknown)
    b = received.samples[pos]
    gram = a.conj().T @ a
    rhs = a.conj().T @ b
    try:
        coeffs_flat = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise IdentifiabilityError(
            f"normal equations singular for {len(delays)} delays x "
            f"{basis.count} basis terms from {len(pos)} observations") from exc
    coeffs = coeffs_flat.reshape(len(delays), basis.count)
    gains = coeffs @ u
    return BEMCoefficients(coeffs), CIREstimate(gains, delays, "bem-ls")


def estimate_cir_windowed(received: ComplexSignal, frame: np.ndarray, delay_grid,
                          normalized_doppler: float,
                          window_len: int = DEFAULT_WINDOW_LEN,
                          positions: np.ndarray | None = None) -> CIREstimate:
    """Windowed BEM-LS over a long frame.

    Windows are fitted independently with a basis sized by
    ``basis_dimension`` for the window length; a short tail is merged into
    the final window.  ``positions`` (frame indices) defaults to every
    sample; the known ``frame`` is global, so regressors near a window's
    start reach back into the previous window's symbols.
    """
    delays = tuple(int(d) for d in delay_grid)
    if len(set(delays)) != len(delays):
        raise ValueError("delay_grid entries must be unique")
    n = len(received)
    if window_len < 2:
        raise ValueError("window_len must be >= 2")
    if len(frame) != n:
        raise ValueError(f"frame length {len(frame)} != received length {n}")
    if positions is None:
        positions = np.arange(n)
    starts = list(range(0, n, window_len))
    if len(starts) > 1 and n - starts[-1] < window_len // 2:
        starts.pop()  # merge short tail into the previous window
    gains = np.zeros((len(delays), n), dtype=np.complex128)
    for i, w0 in enumerate(starts):
        w1 = starts[i + 1] if i + 1 < len(starts) else n
        wlen = w1 - w0
        count = min(basis_dimension(normalized_doppler, wlen), wlen)
        basis = generate_dpss(wlen, max(normalized_doppler, 1.0 / (4.0 * wlen)), count)
        pos = positions[(positions >= w0) & (positions < w1)] - w0
        shifts = _shifted_frame(frame, delays, w0, w1)
        a = (shifts[pos, :, None] * basis.sequences.T[pos, None, :]).reshape(
            len(pos), len(delays) * count)
        if len(pos) < len(delays) * count:
            raise IdentifiabilityError(
                f"window [{w0}, {w1}): {len(pos)} observations cannot identify "
                f"{len(delays)} delays x {count} basis terms")
        b = received.samples[w0:w1][pos]
        gram = a.conj().T @ a
        rhs = a.conj().T @ b
        try:
            coeffs = np.linalg.solve(gram, rhs).reshape(len(delays), count)
        except np.linalg.LinAlgError as exc:
            raise IdentifiabilityError(
                f"normal equations singular in window [{w0}, {w1})") from exc
        gains[:, w0:w1] = coeffs @ basis.sequences
    return CIREstimate(gains, delays, "bem-ls")
