import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import brute_force_paths, static_probe, steering_matrix
from chanident.errors import InsufficientSignalError
from chanident.mseq import generate_mseq
from chanident.simulate import ComplexSignal
from chanident.sounding import (amplitude_given_delay, delay_argmax, estimate_order,
                                fit_cost, probe_spectrum, relax_estimate,
                                residual_spectrum)

MSEQ = generate_mseq(8)
N = MSEQ.period


class TestEstimateOrder:
    def test_single_path_unit_channel(self):
        received = static_probe(MSEQ, [1.0], [0])
        est = estimate_order(received, MSEQ)
        assert est.order == 1
        assert est.peak_lags == (0,)

    def test_four_path_channel(self):
        amps = np.array([1.0, 0.9j, -0.8, 0.7 * np.exp(1j)])
        received = static_probe(MSEQ, amps, [0, 3, 7, 11])
        est = estimate_order(received, MSEQ)
        assert est.order == 4
        assert est.peak_lags == (0, 3, 7, 11)

    def test_all_zero_probe_rejected(self):
        received = ComplexSignal(np.zeros(2 * N), MSEQ.chip_period_s)
        with pytest.raises(InsufficientSignalError):
            estimate_order(received, MSEQ)

    def test_short_probe_rejected(self):
        received = ComplexSignal(np.ones(N - 1), MSEQ.chip_period_s)
        with pytest.raises(ValueError, match="period"):
            estimate_order(received, MSEQ)

    def test_weak_tap_below_threshold_not_counted(self):
        # |mu| ratio 0.3 < threshold_factor 0.5: expect only the strong tap
        received = static_probe(MSEQ, [1.0, 0.3], [0, 5])
        est = estimate_order(received, MSEQ, threshold_factor=0.5)
        assert est.order == 1
        est = estimate_order(received, MSEQ, threshold_factor=0.2)
        assert est.order == 2

    def test_order_correct_when_ratio_exceeds_threshold(self):
        # coupling contract: order is right whenever
        # min|mu|^2 / max|mu|^2 > threshold_factor^2
        rng = np.random.default_rng(4)
        for _ in range(20):
            count = rng.integers(2, 7)
            mags = rng.uniform(0.62, 1.0, count)  # ratio > 0.6 > 0.5
            phases = np.exp(2j * np.pi * rng.uniform(size=count))
            delays = np.sort(rng.choice(40, count, replace=False))
            received = static_probe(MSEQ, mags * phases, delays)
            est = estimate_order(received, MSEQ, threshold_factor=0.5)
            assert est.order == count
            assert est.peak_lags == tuple(delays)

    def test_noise_only_probe_rejected(self):
        rng = np.random.default_rng(8)
        noise = rng.standard_normal(4 * N) + 1j * rng.standard_normal(4 * N)
        received = ComplexSignal(noise, MSEQ.chip_period_s)
        with pytest.raises(InsufficientSignalError):
            estimate_order(received, MSEQ)


class TestProbeSpectrum:
    def test_identity_channel_matches_local(self):
        received = ComplexSignal(MSEQ.chips.astype(complex), MSEQ.chip_period_s)
        freq = probe_spectrum(received, MSEQ)
        assert np.allclose(freq.R, freq.M_diag)

    def test_shift_theorem(self):
        d = 9
        received = ComplexSignal(np.roll(MSEQ.chips, d).astype(complex), MSEQ.chip_period_s)
        freq = probe_spectrum(received, MSEQ)
        k = freq.k_grid()
        assert np.allclose(freq.R, freq.M_diag * np.exp(-2j * np.pi * k * d / N))

    def test_parseval(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        freq = probe_spectrum(ComplexSignal(x, MSEQ.chip_period_s), MSEQ)
        assert np.sum(np.abs(x) ** 2) == pytest.approx(np.sum(np.abs(freq.R) ** 2) / N)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="period"):
            probe_spectrum(ComplexSignal(np.ones(N + 1), 1e-5), MSEQ)


def _freq_for(amplitudes, delays, snr_db=None, seed=0):
    from chanident.sounding import fold_periods
    received = static_probe(MSEQ, amplitudes, delays, periods=4, snr_db=snr_db, seed=seed)
    return probe_spectrum(fold_periods(received.samples, N), MSEQ)


class TestAmplitudeGivenDelay:
    def test_single_unit_path(self):
        freq = _freq_for([1.0], [0])
        assert amplitude_given_delay(freq, freq.R, 0) == pytest.approx(1.0, abs=1e-9)

    def test_linearity_in_residual(self):
        freq = _freq_for([0.5 + 0.2j], [3])
        c = -1.3 + 0.7j
        a1 = amplitude_given_delay(freq, freq.R, 3)
        a2 = amplitude_given_delay(freq, c * freq.R, 3)
        assert a2 == pytest.approx(c * a1)

    def test_two_path_residual_with_second_removed(self):
        # construct the residual analytically: R minus path 2's exact term
        mu = (0.8 - 0.3j, 0.25j)
        freq = _freq_for(mu, [2, 9])
        second = steering_matrix(freq, [9])[:, 0] * mu[1]
        assert amplitude_given_delay(freq, freq.R - second, 2) == pytest.approx(mu[0], abs=1e-9)


class TestDelayArgmax:
    def test_single_path(self):
        freq = _freq_for([1.0], [5])
        assert delay_argmax(freq, freq.R, range(N)) == 5

    def test_dominant_path_wins(self):
        # oracle: evaluate the objective exhaustively with explicit loops
        freq = _freq_for([1.0, 0.3], [2, 9])
        k = freq.k_grid()
        best, best_val = None, -1.0
        for tau in range(N):
            alpha = np.exp(-2j * np.pi * tau * k / N)
            val = np.abs(np.vdot(alpha, np.conj(freq.M_diag) * freq.R)) ** 2
            if val > best_val:
                best, best_val = tau, val
        assert best == 2
        assert delay_argmax(freq, freq.R, range(N)) == 2

    @given(st.integers(0, 2 ** 31), st.integers(1, 120))
    @settings(max_examples=20, deadline=None)
    def test_invariant_to_residual_scaling(self, seed, scale_steps):
        rng = np.random.default_rng(seed)
        amps = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        freq = _freq_for(amps, [1, 6, 14])
        c = 0.01 * scale_steps * np.exp(2j * np.pi * rng.uniform())
        assert delay_argmax(freq, freq.R, range(30)) == delay_argmax(freq, c * freq.R, range(30))

    def test_empty_range_rejected(self):
        freq = _freq_for([1.0], [0])
        with pytest.raises(ValueError, match="empty"):
            delay_argmax(freq, freq.R, [])


class TestRelaxEstimate:
    def test_single_path_exact(self):
        freq = _freq_for([0.8j], [7])
        est = relax_estimate(freq, 1, range(N))
        assert est.delays == (7,)
        assert est.amplitudes[0] == pytest.approx(0.8j, abs=1e-9)
        assert est.residual_cost < 1e-18

    def test_two_paths_match_brute_force(self):
        freq = _freq_for([1.0, 0.5], [0, 4])
        est = relax_estimate(freq, 2, range(24))
        cost, delays, amps = brute_force_paths(freq, 2, range(24))
        assert est.delays == delays == (0, 4)
        assert np.allclose(est.amplitudes, amps, atol=1e-6)
        assert est.residual_cost < 1e-12

    def test_three_paths_snr20_monte_carlo(self):
        rng = np.random.default_rng(17)
        hits = 0
        for trial in range(100):
            mags = np.array([1.0, 0.7, 0.5])
            phases = np.exp(2j * np.pi * rng.uniform(size=3))
            delays = np.sort(rng.choice(24, 3, replace=False))
            freq = _freq_for(mags * phases, delays, snr_db=20.0, seed=trial)
            est = relax_estimate(freq, 3, range(24))
            hits += est.delays == tuple(delays)
        assert hits >= 95

    def test_cost_trace_non_increasing(self):
        rng = np.random.default_rng(3)
        amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        freq = _freq_for(amps, [0, 5, 11, 19], snr_db=10.0)
        est = relax_estimate(freq, 4, range(32))
        trace = np.array(est.cost_trace)
        assert np.all(np.diff(trace) <= 1e-12 * trace[0])

    def test_residual_cost_recomputable(self):
        freq = _freq_for([1.0, 0.4j], [2, 8], snr_db=15.0)
        est = relax_estimate(freq, 2, range(16))
        assert fit_cost(freq, est.paths) == pytest.approx(est.residual_cost, rel=1e-12)
        res = residual_spectrum(freq, est.paths)
        assert np.sum(np.abs(res) ** 2) == pytest.approx(est.residual_cost, rel=1e-12)

    def test_too_few_candidates_rejected(self):
        freq = _freq_for([1.0], [0])
        with pytest.raises(ValueError, match="candidate"):
            relax_estimate(freq, 3, [0, 1])

    def test_delays_unique_and_sorted(self):
        freq = _freq_for([1.0, 0.9, 0.8], [3, 4, 5], snr_db=25.0)
        est = relax_estimate(freq, 3, range(10))
        assert list(est.delays) == sorted(set(est.delays))

    def test_20db_amplitude_ratio_matches_oracle(self):
        # weakest/strongest |mu| ratio of exactly 20 dB, noiseless, N = 255
        freq = _freq_for([1.0, 0.1j], [3, 12])
        est = relax_estimate(freq, 2, range(16))
        _, oracle_delays, _ = brute_force_paths(freq, 2, range(16))
        assert est.delays == oracle_delays == (3, 12)
        assert abs(est.amplitudes[1] - 0.1j) < 1e-9
