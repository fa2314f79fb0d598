import numpy as np
import pytest

from oracles import finite_difference_gradients, max_relative_error
from onsetml.errors import TrainingError
from onsetml.neural import (
    AdaGradState,
    DropoutSpec,
    LstmLayer,
    MlpNetwork,
    NeuralConfig,
    _draw_mask,
    adagrad_step,
    backprop,
    ensemble_combine,
    lstm_forward,
    max_pool_1d,
    mlp_forward,
    pool_rows,
    train_encoder,
)

DROPOUT_OFF = DropoutSpec(rate=0.0, training_mode=False)


def zeroed(layer_or_net):
    for arr in (
        layer_or_net.params().values()
        if isinstance(layer_or_net, LstmLayer)
        else [*layer_or_net.weights, *layer_or_net.biases]
    ):
        arr[...] = 0.0
    return layer_or_net


class TestMaxPool:
    def test_pairs(self):
        out = max_pool_1d([3, 1, 4, 1, 5, 9, 2, 6], window=2, stride=2)
        assert out.tolist() == [3, 4, 9, 6]

    def test_global_window(self):
        assert max_pool_1d([1, 7, 3], window=3, stride=3).tolist() == [7]

    def test_constant(self):
        assert max_pool_1d([2.5] * 6, window=2, stride=2).tolist() == [2.5] * 3

    def test_trailing_partial_window(self):
        assert max_pool_1d([1, 2, 3], window=2, stride=2).tolist() == [2, 3]

    def test_errors(self):
        with pytest.raises(ValueError, match="empty"):
            max_pool_1d([], window=1, stride=1)
        with pytest.raises(ValueError, match="exceeds"):
            max_pool_1d([1, 2], window=3, stride=1)
        with pytest.raises(ValueError, match="at least 1"):
            max_pool_1d([1, 2], window=0, stride=1)

    def test_pool_rows(self):
        X = np.array([[1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0]])
        assert pool_rows(X, 2, 2).tolist() == [[2.0, 4.0], [4.0, 2.0]]


class TestLstmForward:
    def test_zero_weights_give_zero_hidden(self):
        layer = zeroed(LstmLayer(1, hidden_size=6, seed=0))
        final, all_h = lstm_forward(layer, np.ones((5, 1)))
        assert np.array_equal(final, np.zeros(6))
        assert np.array_equal(all_h, np.zeros((5, 6)))

    def test_default_hidden_size_is_70(self):
        layer = LstmLayer(1, seed=0)
        final, _ = lstm_forward(layer, np.ones((4, 1)))
        assert final.shape == (70,)

    def test_zero_weights_gate_values(self):
        layer = zeroed(LstmLayer(2, hidden_size=3, seed=0))
        _, caches = layer.forward_batch(np.ones((1, 1, 2)))
        _, _, _, i, f, g, o, _ = caches[0]
        assert np.array_equal(i, np.full((1, 3), 0.5))
        assert np.array_equal(f, np.full((1, 3), 0.5))
        assert np.array_equal(o, np.full((1, 3), 0.5))
        assert np.array_equal(g, np.zeros((1, 3)))

    def test_hidden_states_bounded_by_one(self):
        rng = np.random.RandomState(1)
        layer = LstmLayer(2, hidden_size=8, seed=1)
        # exaggerate weights to push toward saturation
        layer.W *= 20.0
        layer.U *= 20.0
        _, all_h = lstm_forward(layer, rng.randn(30, 2))
        assert np.abs(all_h).max() <= 1.0

    def test_scalar_sequence_accepted(self):
        layer = LstmLayer(1, hidden_size=4, seed=2)
        final_a, _ = lstm_forward(layer, np.array([1.0, 2.0, 3.0]))
        final_b, _ = lstm_forward(layer, np.array([[1.0], [2.0], [3.0]]))
        assert np.array_equal(final_a, final_b)

    def test_empty_sequence_rejected(self):
        layer = LstmLayer(1, hidden_size=4, seed=3)
        with pytest.raises(ValueError, match="non-empty"):
            layer.forward_batch(np.empty((1, 0, 1)))

    def test_dimension_mismatch(self):
        layer = LstmLayer(2, hidden_size=4, seed=4)
        with pytest.raises(ValueError, match="expected"):
            lstm_forward(layer, np.ones((3, 5)))


class TestMlpForward:
    def test_zero_network_outputs_half(self):
        net = zeroed(MlpNetwork(4, (3, 2), seed=0))
        assert mlp_forward(net, np.zeros(4), DROPOUT_OFF) == 0.5

    def test_output_strictly_inside_unit_interval(self):
        rng = np.random.RandomState(5)
        net = MlpNetwork(6, (8, 4), seed=5)
        for _ in range(50):
            p = mlp_forward(net, rng.randn(6) * 3, DROPOUT_OFF)
            assert 0.0 < p < 1.0

    def test_zero_rate_training_equals_inference(self):
        rng = np.random.RandomState(6)
        net = MlpNetwork(5, (6,), seed=6)
        x = rng.randn(5)
        on = mlp_forward(net, x, DropoutSpec(rate=0.0, seed=1, training_mode=True))
        off = mlp_forward(net, x, DROPOUT_OFF)
        assert on == off

    def test_dropout_masks_are_seed_deterministic(self):
        rng = np.random.RandomState(7)
        net = MlpNetwork(5, (16,), seed=7)
        x = rng.randn(5)
        spec = DropoutSpec(rate=0.5, seed=123, training_mode=True)
        assert mlp_forward(net, x, spec) == mlp_forward(net, x, spec)
        other = DropoutSpec(rate=0.5, seed=124, training_mode=True)
        assert mlp_forward(net, x, spec) != mlp_forward(net, x, other)

    def test_dimension_mismatch(self):
        net = MlpNetwork(5, (4,), seed=8)
        with pytest.raises(ValueError, match="expected"):
            mlp_forward(net, np.zeros(6), DROPOUT_OFF)


class TestEnsembleCombine:
    def test_hand_value(self):
        assert abs(ensemble_combine([0.8, 0.6], [0.5, 0.5]) - 0.7) < 1e-12

    def test_single_member_identity(self):
        assert ensemble_combine([0.37], [1.0]) == 0.37

    def test_constant_outputs_invariant(self):
        rng = np.random.RandomState(9)
        for _ in range(20):
            w = rng.dirichlet(np.ones(4))
            assert abs(ensemble_combine([0.42] * 4, w) - 0.42) < 1e-12

    def test_errors(self):
        with pytest.raises(ValueError, match="length"):
            ensemble_combine([0.5], [0.5, 0.5])
        with pytest.raises(ValueError, match="sum to 1"):
            ensemble_combine([0.5, 0.5], [0.6, 0.6])
        with pytest.raises(ValueError, match="non-negative"):
            ensemble_combine([0.5, 0.5], [1.5, -0.5])


class TestBackprop:
    def gradcheck(self, seed, dropout):
        rng = np.random.RandomState(seed)
        batch, time = 3, 4
        layer = LstmLayer(1, hidden_size=5, seed=seed)
        net = MlpNetwork(5, (4,), seed=seed + 100)
        X = rng.randn(batch, time, 1)
        y = rng.randint(0, 2, size=batch).astype(float)

        params = {**layer.params(), **net.params()}
        _, analytic = backprop(layer, net, X, y, dropout)
        numeric = finite_difference_gradients(
            lambda: backprop(layer, net, X, y, dropout)[0], params, step=1e-5
        )
        return max_relative_error(analytic, numeric)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, seed):
        assert self.gradcheck(seed, DROPOUT_OFF) <= 1e-4

    def test_matches_finite_differences_with_dropout(self):
        spec = DropoutSpec(rate=0.35, seed=42, training_mode=True)
        assert self.gradcheck(3, spec) <= 1e-4

    def test_saturated_predictions_have_small_gradients(self):
        layer = zeroed(LstmLayer(1, hidden_size=3, seed=0))
        net = MlpNetwork(3, (2,), seed=0)
        # force a hugely confident, correct output layer
        for W in net.weights:
            W[...] = 0.0
        for b in net.biases:
            b[...] = 0.0
        net.biases[-1][...] = 30.0  # logit 30 -> p ~ 1
        X = np.ones((4, 2, 1))
        y = np.ones(4)
        loss, grads = backprop(layer, net, X, y, DROPOUT_OFF)
        assert loss < 1e-12
        assert max(np.abs(g).max() for g in grads.values()) < 1e-12

    def test_duplicated_batch_keeps_mean_gradient(self):
        rng = np.random.RandomState(10)
        layer = LstmLayer(1, hidden_size=4, seed=10)
        net = MlpNetwork(4, (3,), seed=11)
        X = rng.randn(5, 3, 1)
        y = rng.randint(0, 2, 5).astype(float)
        _, once = backprop(layer, net, X, y, DROPOUT_OFF)
        _, twice = backprop(
            layer, net, np.vstack([X, X]), np.concatenate([y, y]), DROPOUT_OFF
        )
        for key in once:
            assert np.allclose(once[key], twice[key], rtol=1e-12, atol=1e-14)

    def test_non_finite_loss_names_sample(self):
        layer = zeroed(LstmLayer(1, hidden_size=2, seed=0))
        net = zeroed(MlpNetwork(2, (2,), seed=0))
        net.biases[-1][...] = np.inf
        with pytest.raises(TrainingError, match="sample 0"):
            backprop(layer, net, np.ones((2, 2, 1)), np.array([1.0, 0.0]), DROPOUT_OFF)

    def test_deterministic(self):
        rng = np.random.RandomState(12)
        layer = LstmLayer(1, hidden_size=4, seed=12)
        net = MlpNetwork(4, (3,), seed=13)
        X = rng.randn(4, 3, 1)
        y = rng.randint(0, 2, 4).astype(float)
        spec = DropoutSpec(rate=0.2, seed=5, training_mode=True)
        l1, g1 = backprop(layer, net, X, y, spec)
        l2, g2 = backprop(layer, net, X, y, spec)
        assert l1 == l2
        for key in g1:
            assert np.array_equal(g1[key], g2[key])


class TestAdaGrad:
    def test_first_step_hand_value(self):
        state = AdaGradState(learning_rate=0.2)
        theta, _ = adagrad_step(state, np.array([1.0]), np.array([3.0]))
        assert abs(theta[0] - 0.8) < 1e-7

    def test_zero_gradient_is_identity(self):
        state = AdaGradState()
        p = np.array([1.5, -2.0])
        out, _ = adagrad_step(state, p, np.zeros(2))
        assert np.array_equal(out, np.array([1.5, -2.0]))
        assert np.array_equal(state.accumulators["param"], np.zeros(2))

    def test_second_equal_step_is_smaller(self):
        state = AdaGradState(learning_rate=0.2)
        p = np.array([0.0])
        g = np.array([2.0])
        adagrad_step(state, p, g)
        first = abs(p[0])
        before = p[0]
        adagrad_step(state, p, g)
        second = abs(p[0] - before)
        assert second < first

    def test_accumulators_monotone(self):
        state = AdaGradState()
        rng = np.random.RandomState(13)
        p = rng.randn(6)
        prev = np.zeros(6)
        for _ in range(20):
            adagrad_step(state, p, rng.randn(6))
            acc = state.accumulators["param"]
            assert (acc >= prev).all()
            prev = acc.copy()

    def test_dict_parameters(self):
        state = AdaGradState(learning_rate=0.1)
        params = {"w": np.ones(2), "b": np.zeros(1)}
        grads = {"w": np.ones(2), "b": np.ones(1)}
        adagrad_step(state, params, grads)
        assert params["w"][0] < 1.0
        assert set(state.accumulators) == {"w", "b"}

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            adagrad_step(AdaGradState(), {"w": np.ones(2)}, {"w": np.ones(3)})


class TestDropoutMask:
    def test_inverted_dropout_preserves_expectation(self):
        spec = DropoutSpec(rate=0.35, seed=99, training_mode=True)
        masks = _draw_mask(spec.mask_rng(), (100_000, 8), spec.rate)
        assert np.abs(masks.mean(axis=0) - 1.0).max() < 0.02

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            DropoutSpec(rate=1.0)


class TestTrainEncoder:
    def test_learns_separable_data(self):
        rng = np.random.RandomState(14)
        n = 60
        X = np.vstack([rng.randn(n // 2, 6) + 2.0, rng.randn(n // 2, 6) - 2.0])
        y = np.array([1] * (n // 2) + [0] * (n // 2))
        cfg = NeuralConfig(
            hidden_size=8, mlp_hidden=(6,), ensemble_size=2, epochs=30,
            dropout_rate=0.1,
        )
        encoder, losses = train_encoder(X, y, cfg, seed=0)
        assert losses[-1] < losses[0]
        scores = encoder.scores(X)
        acc = float(((scores >= 0.5).astype(int) == y).mean())
        assert acc >= 0.9

    def test_deterministic(self):
        rng = np.random.RandomState(15)
        X = rng.randn(20, 4)
        y = rng.randint(0, 2, 20)
        cfg = NeuralConfig(hidden_size=5, mlp_hidden=(4,), ensemble_size=2, epochs=5)
        enc1, losses1 = train_encoder(X, y, cfg, seed=3)
        enc2, losses2 = train_encoder(X, y, cfg, seed=3)
        assert losses1 == losses2
        assert np.array_equal(enc1.lstm.W, enc2.lstm.W)
        assert np.array_equal(enc1.heads[0].weights[0], enc2.heads[0].weights[0])

    def test_encoding_dimension(self):
        rng = np.random.RandomState(16)
        X = rng.randn(10, 8)
        y = rng.randint(0, 2, 10)
        cfg = NeuralConfig(hidden_size=70, mlp_hidden=(4,), ensemble_size=1, epochs=1)
        encoder, _ = train_encoder(X, y, cfg, seed=1)
        assert encoder.encode(X).shape == (10, 70)
        assert encoder.lstm.hidden_size == 70
