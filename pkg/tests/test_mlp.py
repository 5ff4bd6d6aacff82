import math

import numpy as np
import pytest

from chanident.mlp import (MLPParams, TrainConfig, batch_loss, classify,
                           complexity_count, config_fingerprint, forward,
                           gradients, init_mlp, load_mlp, save_mlp, train)


def finite_difference_check(params, x, t, h=1e-5):
    """Worst relative error between analytic and central-difference gradients.

    rel = |a - fd| / max(|a|, |fd|, 1e-5); the 1e-5 floor reflects the
    ~1e-10 absolute accuracy attainable from float64 central differences.
    """
    dw, db = gradients(params, x, t)
    worst = 0.0
    for arrays, grads in ((params.weights, dw), (params.biases, db)):
        for a, g in zip(arrays, grads):
            flat_a, flat_g = a.ravel(), g.ravel()
            for i in range(flat_a.size):
                orig = flat_a[i]
                flat_a[i] = orig + h
                lp = batch_loss(params, x, t)
                flat_a[i] = orig - h
                lm = batch_loss(params, x, t)
                flat_a[i] = orig
                fd = (lp - lm) / (2 * h)
                rel = abs(fd - flat_g[i]) / max(abs(fd), abs(flat_g[i]), 1e-5)
                worst = max(worst, rel)
    return worst


def _random_batch(sizes, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, sizes[0]))
    t = np.zeros((n, sizes[-1]))
    t[np.arange(n), rng.integers(0, sizes[-1], n)] = 1.0
    return x, t


class TestInit:
    def test_default_architecture_shapes(self):
        p = init_mlp([4800, 64, 48, 32, 24, 6], seed=0)
        assert [w.shape for w in p.weights] == [(64, 4800), (48, 64), (32, 48), (24, 32), (6, 24)]
        assert [b.shape for b in p.biases] == [(64,), (48,), (32,), (24,), (6,)]

    def test_deterministic(self):
        a = init_mlp([5, 4, 3], seed=7)
        b = init_mlp([5, 4, 3], seed=7)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_biases_zero_and_weight_bounds(self):
        p = init_mlp([10, 8, 2], seed=1)
        assert all(np.all(b == 0) for b in p.biases)
        for w, fan in zip(p.weights, [(10, 8), (8, 2)]):
            bound = math.sqrt(6 / sum(fan))
            assert np.all(np.abs(w) <= bound)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            init_mlp([5], seed=0)
        with pytest.raises(ValueError):
            init_mlp([5, 0, 2], seed=0)


class TestForward:
    def test_zero_params_give_zero_output(self):
        p = MLPParams((3, 4, 2), [np.zeros((4, 3)), np.zeros((2, 4))],
                      [np.zeros(4), np.zeros(2)])
        assert np.array_equal(forward(p, np.ones(3)), np.zeros(2))

    def test_scalar_network_oracle(self):
        # single layer, W = (2), B = (0), input 0.5 -> tanh(1.0)
        p = MLPParams((1, 1), [np.array([[2.0]])], [np.zeros(1)])
        assert forward(p, np.array([0.5]))[0] == pytest.approx(0.761594, abs=1e-6)

    def test_outputs_bounded(self):
        p = init_mlp([6, 10, 4], seed=3)
        rng = np.random.default_rng(0)
        for _ in range(20):
            out = forward(p, 100 * rng.standard_normal(6))
            assert np.all(np.abs(out) < 1.0)

    def test_dimension_mismatch(self):
        p = init_mlp([6, 4, 2], seed=0)
        with pytest.raises(ValueError):
            forward(p, np.ones(5))


class TestGradients:
    def test_matches_finite_differences(self):
        sizes = [6, 10, 6]
        p = init_mlp(sizes, seed=11)
        x, t = _random_batch(sizes, 8, seed=12)
        assert finite_difference_check(p, x, t) < 1e-5

    def test_matches_finite_differences_deep(self):
        sizes = [4, 7, 6, 5, 3]
        p = init_mlp(sizes, seed=21)
        x, t = _random_batch(sizes, 5, seed=22)
        assert finite_difference_check(p, x, t) < 1e-5

    def test_zero_loss_zero_gradients(self):
        p = MLPParams((2, 2), [np.zeros((2, 2))], [np.zeros(2)])
        x = np.ones((3, 2))
        t = np.zeros((3, 2))  # output is exactly tanh(0) = 0 = target
        dw, db = gradients(p, x, t)
        assert np.all(dw[0] == 0) and np.all(db[0] == 0)

    def test_duplicated_batch_mean_invariance(self):
        sizes = [5, 6, 4]
        p = init_mlp(sizes, seed=31)
        x, t = _random_batch(sizes, 6, seed=32)
        dw1, db1 = gradients(p, x, t)
        dw2, db2 = gradients(p, np.vstack([x, x]), np.vstack([t, t]))
        for a, b in zip(dw1 + db1, dw2 + db2):
            assert np.allclose(a, b, atol=1e-14)

    def test_dimension_mismatch(self):
        p = init_mlp([5, 6, 4], seed=0)
        with pytest.raises(ValueError):
            gradients(p, np.ones((2, 5)), np.ones((3, 4)))
        with pytest.raises(ValueError):
            gradients(p, np.ones((0, 5)), np.ones((0, 4)))


def _toy_blobs(n=20, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.vstack([rng.normal((-2, 0), 0.4, (half, 2)),
                   rng.normal((+2, 0), 0.4, (n - half, 2))])
    t = np.zeros((n, 2))
    t[:half, 0] = 1.0
    t[half:, 1] = 1.0
    return x, t


class TestTrain:
    def test_zero_learning_rate_is_noop(self):
        x, t = _toy_blobs()
        p0 = init_mlp([2, 4, 2], seed=1)
        p1, report = train(p0, x, t, TrainConfig(learning_rate=0.0, epochs=5))
        for a, b in zip(p0.weights, p1.weights):
            assert np.array_equal(a, b)
        assert len(set(report.epoch_losses)) == 1

    def test_separable_toy_reaches_full_accuracy(self):
        x, t = _toy_blobs()
        p = init_mlp([2, 8, 2], seed=2)
        p, report = train(p, x, t, TrainConfig(learning_rate=0.1, epochs=500,
                                               plateau_patience=500))
        assert report.final_accuracy == 1.0
        assert len(report.epoch_losses) <= 500

    def test_loss_curve_non_increasing_within_spikes(self):
        # fixed-seed observation; momentum can oscillate on other seeds
        x, t = _toy_blobs()
        p = init_mlp([2, 8, 2], seed=0)
        _, report = train(p, x, t, TrainConfig(epochs=200, plateau_patience=200))
        losses = np.array(report.epoch_losses)
        assert np.all(losses[1:] <= losses[:-1] * 1.05)

    def test_bit_identical_given_seed(self):
        x, t = _toy_blobs()
        cfg = TrainConfig(epochs=50, seed=9)
        a, _ = train(init_mlp([2, 5, 2], seed=4), x, t, cfg)
        b, _ = train(init_mlp([2, 5, 2], seed=4), x, t, cfg)
        for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
            assert np.array_equal(wa, wb)

    def test_empty_dataset_rejected(self):
        p = init_mlp([2, 3, 2], seed=0)
        with pytest.raises(ValueError):
            train(p, np.zeros((0, 2)), np.zeros((0, 2)), TrainConfig())


class TestClassify:
    def test_argmax_plus_one(self):
        p = MLPParams((2, 3), [np.array([[1.0, 0], [0, 0], [0, 0]])], [np.zeros(3)])
        assert classify(p, np.array([1.0, 0.0])) == 1

    def test_tie_breaks_to_smallest(self):
        p = MLPParams((1, 3), [np.array([[0.0], [1.0], [1.0]])], [np.zeros(3)])
        assert classify(p, np.array([0.7])) == 2

    def test_invariant_to_uniform_scaling_of_preactivation(self):
        # tanh is monotone, so scaling the final pre-activation by any
        # positive constant cannot change the argmax
        rng = np.random.default_rng(5)
        p = init_mlp([4, 6, 3], seed=6)
        for _ in range(10):
            x = rng.standard_normal(4)
            base = classify(p, x)
            scaled = MLPParams(p.layer_sizes,
                               [p.weights[0], 3.7 * p.weights[1]],
                               [p.biases[0], 3.7 * p.biases[1]])
            assert classify(scaled, x) == base


class TestComplexityCount:
    def test_reference_network(self):
        # direct evaluation of the operation-count formula:
        # 2*600*(64*48 + 48*32 + 32*24) + 2*600*24*6 + 2*600*6
        #   = 6,451,200 + 172,800 + 7,200 = 6,631,200
        p = init_mlp([4800, 64, 48, 32, 24, 6], seed=0)
        assert complexity_count(p, 600) == 6_631_200

    def test_minimal_network(self):
        p = init_mlp([3, 1, 1], seed=0)
        assert complexity_count(p, 1) == 4

    def test_linear_in_samples(self):
        p = init_mlp([10, 8, 6, 4], seed=0)
        assert complexity_count(p, 34) == 2 * complexity_count(p, 17)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        p = init_mlp([5, 4, 3], seed=13)
        path = tmp_path / "model.json"
        save_mlp(p, path, config_fingerprint(TrainConfig()))
        q, fp = load_mlp(path)
        assert q.layer_sizes == p.layer_sizes
        for a, b in zip(p.weights + p.biases, q.weights + q.biases):
            assert np.array_equal(a, b)
        assert fp["digest"] == config_fingerprint(TrainConfig())["digest"]

    def test_byte_stable(self, tmp_path):
        x, t = _toy_blobs()
        cfg = TrainConfig(epochs=30, seed=2)
        pa, _ = train(init_mlp([2, 4, 2], seed=1), x, t, cfg)
        pb, _ = train(init_mlp([2, 4, 2], seed=1), x, t, cfg)
        f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
        save_mlp(pa, f1, config_fingerprint(cfg))
        save_mlp(pb, f2, config_fingerprint(cfg))
        assert f1.read_bytes() == f2.read_bytes()

    def test_rejects_wrong_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(ValueError, match="format"):
            load_mlp(path)
