import numpy as np
import pytest

from prunekit.data_io import FeatureSet
from prunekit.errors import DataError, SchemaError, TrainingDivergedError
from prunekit.nn import (
    MlpModel,
    TrainConfig,
    accuracy,
    extract_features,
    forward,
    head_logits,
    init_model,
    load_model,
    loss_and_grad,
    save_model,
    softmax,
    train,
)


def labeled(features, labels):
    return FeatureSet(np.asarray(features, np.float32), np.asarray(labels, np.uint32))


def reference_loss_f64(weights, biases, x, y):
    """Independent straight-line float64 evaluation of the mean cross-entropy."""
    a = np.asarray(x, np.float64)
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = a @ np.asarray(w, np.float64) + np.asarray(b, np.float64)
        a = z if i == len(weights) - 1 else np.maximum(z, 0.0)
    z = a - a.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-log_p[np.arange(len(y)), y].mean())


class TestInit:
    def test_deterministic(self):
        a, b = init_model([8, 16, 5], seed=1), init_model([8, 16, 5], seed=1)
        assert a.params_equal(b)
        assert not a.params_equal(init_model([8, 16, 5], seed=2))

    def test_single_layer_bias_zero(self):
        m = init_model([4, 3], seed=0)
        assert m.n_layers == 1
        assert np.array_equal(m.biases[0], np.zeros(3, np.float32))

    def test_fan_in_bound(self):
        m = init_model([8, 16, 5], seed=1)
        for w, d_in in zip(m.weights, (8, 16)):
            assert np.abs(w).max() <= 1.0 / np.sqrt(d_in)

    def test_invalid_dims(self):
        with pytest.raises(SchemaError):
            init_model([4], seed=0)
        with pytest.raises(SchemaError):
            init_model([4, 0], seed=0)


class TestForward:
    def test_zero_params_zero_logits(self):
        m = MlpModel([3, 4, 2], [np.zeros((3, 4), np.float32), np.zeros((4, 2), np.float32)],
                     [np.zeros(4, np.float32), np.zeros(2, np.float32)])
        out = forward(m, np.random.default_rng(0).standard_normal((5, 3)).astype(np.float32))
        assert np.array_equal(out, np.zeros((5, 2), np.float32))

    def test_identity_single_layer(self):
        m = MlpModel([2, 2], [np.eye(2, dtype=np.float32)], [np.zeros(2, np.float32)])
        out = forward(m, np.array([[2.0, 1.0]], np.float32))
        assert np.array_equal(out, np.array([[2.0, 1.0]], np.float32))

    def test_matches_straight_line_oracle(self):
        m = init_model([4, 6, 3], seed=3)
        x = np.random.default_rng(1).standard_normal((3, 4)).astype(np.float32)
        got = forward(m, x)
        a = x.astype(np.float64)
        a = np.maximum(a @ m.weights[0].astype(np.float64) + m.biases[0], 0.0)
        want = a @ m.weights[1].astype(np.float64) + m.biases[1]
        assert np.abs(got - want).max() / np.abs(want).max() < 1e-6

    def test_dim_mismatch(self):
        with pytest.raises(DataError):
            forward(init_model([4, 2], seed=0), np.zeros((1, 3), np.float32))


class TestExtract:
    def test_no_hidden_is_identity(self):
        m = init_model([4, 3], seed=0)
        fs = FeatureSet(np.random.default_rng(0).standard_normal((5, 4)).astype(np.float32))
        assert extract_features(m, fs) is fs

    def test_hand_set_rectifier(self):
        w = np.array([[1.0, -1.0], [0.0, 2.0]], np.float32)
        b = np.array([0.5, -0.5], np.float32)
        m = MlpModel([2, 2, 2], [w, np.eye(2, dtype=np.float32)], [b, np.zeros(2, np.float32)])
        out = extract_features(m, np.array([[1.0, 1.0]], np.float32))
        # z = [1*1+0*1+0.5, -1*1+2*1-0.5] = [1.5, 0.5]; relu keeps both
        assert np.array_equal(out.features, np.array([[1.5, 0.5]], np.float32))
        out = extract_features(m, np.array([[-1.0, 0.0]], np.float32))
        # z = [-0.5, 0.5] -> relu [0, 0.5]
        assert np.array_equal(out.features, np.array([[0.0, 0.5]], np.float32))

    def test_forward_decomposes_exactly(self):
        m = init_model([5, 7, 4, 3], seed=9)
        x = np.random.default_rng(2).standard_normal((6, 5)).astype(np.float32)
        reps = extract_features(m, x)
        assert reps.dim == 4
        assert np.array_equal(forward(m, x), head_logits(m, reps))


class TestLossGrad:
    def test_uniform_prediction_loss_is_log_c(self):
        for c in (2, 5, 9):
            m = MlpModel([3, c], [np.zeros((3, c), np.float32)], [np.zeros(c, np.float32)])
            batch = labeled(np.random.default_rng(0).standard_normal((4, 3)), [0, 1, 0, 1])
            loss, _, _ = loss_and_grad(m, batch)
            assert abs(loss - np.log(c)) < 1e-6

    def test_gradient_matches_central_differences(self):
        m = init_model([3, 4, 3], seed=5)
        rng = np.random.default_rng(7)
        batch = labeled(rng.standard_normal((6, 3)), rng.integers(0, 3, 6))
        _, gw, gb = loss_and_grad(m, batch)
        h = 1e-3
        y = batch.labels.astype(np.int64)
        for li in range(2):
            for arr, grad in ((m.weights[li], gw[li]), (m.biases[li], gb[li])):
                flat = arr.reshape(-1)
                for j in range(flat.size):
                    ws = [w.astype(np.float64) for w in m.weights]
                    bs = [b.astype(np.float64) for b in m.biases]
                    tgt = (ws[li] if arr is m.weights[li] else bs[li]).reshape(-1)
                    orig = tgt[j]
                    tgt[j] = orig + h
                    up = reference_loss_f64(ws, bs, batch.features, y)
                    tgt[j] = orig - h
                    down = reference_loss_f64(ws, bs, batch.features, y)
                    numeric = (up - down) / (2 * h)
                    analytic = grad.reshape(-1)[j]
                    denom = max(abs(numeric), abs(analytic), 1e-4)
                    assert abs(numeric - analytic) / denom <= 1e-3

    def test_weight_decay_adds_param_term(self):
        m = init_model([3, 2], seed=1)
        batch = labeled(np.random.default_rng(0).standard_normal((4, 3)), [0, 1, 1, 0])
        loss0, gw0, gb0 = loss_and_grad(m, batch)
        loss1, gw1, gb1 = loss_and_grad(m, batch, weight_decay=0.1)
        assert loss0 == loss1  # decay affects the gradient only
        assert np.allclose(gw1[0], gw0[0] + np.float32(0.1) * m.weights[0], atol=1e-7)
        assert np.allclose(gb1[0], gb0[0] + np.float32(0.1) * m.biases[0], atol=1e-7)

    def test_duplication_leaves_mean_unchanged(self):
        m = init_model([3, 4, 2], seed=2)
        rng = np.random.default_rng(3)
        x = rng.standard_normal((5, 3)).astype(np.float32)
        y = rng.integers(0, 2, 5).astype(np.uint32)
        loss1, gw1, _ = loss_and_grad(m, FeatureSet(x, y))
        loss2, gw2, _ = loss_and_grad(m, FeatureSet(np.vstack([x, x]), np.concatenate([y, y])))
        assert abs(loss1 - loss2) < 1e-6
        assert max(np.abs(a - b).max() for a, b in zip(gw1, gw2)) < 1e-6

    def test_label_out_of_range(self):
        m = init_model([3, 2], seed=1)
        with pytest.raises(DataError):
            loss_and_grad(m, labeled(np.zeros((1, 3)), [2]))


class TestTrain:
    def separable_task(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((100, 2)) + [3.0, 0.0]
        b = rng.standard_normal((100, 2)) + [-3.0, 0.0]
        return labeled(np.vstack([a, b]), [0] * 100 + [1] * 100)

    def test_separable_reaches_99(self):
        data = self.separable_task()
        model, trace = train(init_model([2, 8, 2], seed=1), data,
                             TrainConfig(30, 32, 0.05, momentum=0.9, seed=1))
        assert accuracy(model, data) >= 0.99
        assert len(trace) == 30

    def test_zero_learning_rate_is_identity(self):
        data = self.separable_task()
        m0 = init_model([2, 4, 2], seed=1)
        m1, _ = train(m0, data, TrainConfig(3, 32, 0.0, momentum=0.9, seed=1))
        assert m1.params_equal(m0)

    def test_zero_epochs_is_identity(self):
        data = self.separable_task()
        m0 = init_model([2, 4, 2], seed=1)
        m1, trace = train(m0, data, TrainConfig(0, 32, 0.1, seed=1))
        assert m1.params_equal(m0) and trace == []

    def test_bit_identical_reruns(self):
        data = self.separable_task()
        cfg = TrainConfig(5, 16, 0.05, momentum=0.9, weight_decay=1e-3, seed=9)
        m1, t1 = train(init_model([2, 6, 2], seed=3), data, cfg)
        m2, t2 = train(init_model([2, 6, 2], seed=3), data, cfg)
        assert m1.params_equal(m2) and t1 == t2

    def test_input_model_not_mutated(self):
        data = self.separable_task()
        m0 = init_model([2, 4, 2], seed=1)
        snapshot = m0.copy()
        train(m0, data, TrainConfig(2, 32, 0.1, seed=1))
        assert m0.params_equal(snapshot)

    def test_empty_data_rejected(self):
        m = init_model([2, 2], seed=0)
        with pytest.raises(DataError):
            train(m, FeatureSet(np.zeros((0, 2), np.float32), np.zeros(0, np.uint32)),
                  TrainConfig(1, 4, 0.1))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_aborts_with_diagnostic(self):
        # lr * weight_decay >> 2 makes the decay step multiplicative-divergent;
        # the float32 overflow on the way to NaN is the point of the test
        data = self.separable_task()
        with pytest.raises(TrainingDivergedError) as err:
            train(init_model([2, 8, 2], seed=1), data,
                  TrainConfig(10, 8, 1e6, weight_decay=1e-3, seed=1))
        assert "epoch" in str(err.value)


class TestAccuracy:
    def constant_model(self, c=0, n_classes=2):
        w = np.zeros((3, n_classes), np.float32)
        b = np.zeros(n_classes, np.float32)
        b[c] = 1.0
        return MlpModel([3, n_classes], [w], [b])

    def test_all_correct(self):
        data = labeled(np.zeros((4, 3)), [0, 0, 0, 0])
        assert accuracy(self.constant_model(0), data) == 1.0

    def test_all_wrong(self):
        data = labeled(np.zeros((4, 3)), [1, 1, 1, 1])
        assert accuracy(self.constant_model(0), data) == 0.0

    def test_manual_count(self):
        m = MlpModel([2, 2], [np.eye(2, dtype=np.float32)], [np.zeros(2, np.float32)])
        data = labeled([[2.0, 1.0], [-1.0, 3.0], [0.0, 0.0]], [0, 1, 1])
        # argmaxes: 0, 1, tie -> 0; labels 0, 1, 1 -> 2/3 correct
        assert accuracy(m, data) == pytest.approx(2 / 3)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            accuracy(self.constant_model(), FeatureSet(np.zeros((0, 3), np.float32),
                                                       np.zeros(0, np.uint32)))


class TestSoftmax:
    def test_rows_sum_to_one(self):
        z = np.random.default_rng(0).standard_normal((5, 7)).astype(np.float32) * 10
        p = softmax(z)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-5)
        assert (p >= 0).all()

    def test_shift_invariant(self):
        z = np.random.default_rng(1).standard_normal((4, 3)).astype(np.float32)
        assert np.allclose(softmax(z), softmax(z + np.float32(100.0)), atol=1e-6)


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        m = init_model([5, 7, 3], seed=11)
        m.seed_lineage.append(42)
        save_model(m, tmp_path / "m.ckpt")
        back = load_model(tmp_path / "m.ckpt")
        assert back.params_equal(m)
        assert back.layer_dims == m.layer_dims
        assert back.seed_lineage == [11, 42]

    def test_deterministic_bytes(self, tmp_path):
        m = init_model([4, 2], seed=0)
        save_model(m, tmp_path / "1.ckpt")
        save_model(m, tmp_path / "2.ckpt")
        assert (tmp_path / "1.ckpt").read_bytes() == (tmp_path / "2.ckpt").read_bytes()
