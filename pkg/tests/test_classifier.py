import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freqrag.classifier import (
    AdamState,
    ModelDims,
    ModelParams,
    TrainConfig,
    _focal_batch,
    adam_step,
    backward,
    cosine_anneal,
    focal_loss,
    forward,
    forward_batch,
    init_params,
    load_model,
    predict,
    save_model,
    train,
)
from freqrag.dataio import SampleSet, SynthConfig, synth_dataset
from freqrag.errors import DataError, NumericError
from freqrag.evaluation import cross_validate

DIMS = ModelDims(d_vf=8, d_tf=6, d_f=5, d_k=7, n_classes=2)


def _rand_inputs(rng, n=3):
    return (
        rng.normal(size=(n, DIMS.d_vf)),
        rng.normal(size=(n, DIMS.d_tf)),
        rng.normal(size=(n, DIMS.d_k)),
        rng.integers(0, 2, size=n),
    )


class TestInitParams:
    def test_deterministic(self):
        a = init_params(DIMS, seed=5)
        b = init_params(DIMS, seed=5)
        for (_, x), (_, y) in zip(a.tensors(), b.tensors()):
            np.testing.assert_array_equal(x, y)

    def test_biases_zero(self):
        p = init_params(DIMS, seed=1)
        for name, arr in p.tensors():
            if name.endswith(".b"):
                assert not arr.any()

    def test_weights_within_glorot_bound(self):
        for seed in range(10):
            p = init_params(DIMS, seed=seed)
            for name, arr in p.tensors():
                if name.endswith(".W"):
                    fan_out, fan_in = arr.shape
                    bound = math.sqrt(6.0 / (fan_in + fan_out))
                    assert np.abs(arr).max() <= bound

    def test_head_width_depends_on_mode(self):
        gated = init_params(DIMS, 0, "gated")
        concat = init_params(DIMS, 0, "concat")
        assert gated.head_W.shape == (2, 2 * DIMS.d_f)
        assert concat.head_W.shape == (2, DIMS.d_vf + DIMS.d_tf + DIMS.d_f)


class TestForward:
    def test_zero_head_gives_uniform(self):
        p = init_params(DIMS, 3)
        p.head_W[:] = 0.0
        p.head_b[:] = 0.0
        pred = forward(p, np.ones(8), np.ones(6), np.ones(7))
        np.testing.assert_allclose(pred.probs, [0.5, 0.5], atol=1e-15)

    def test_softmax_arithmetic(self):
        p = init_params(DIMS, 3)
        p.head_W[:] = 0.0
        p.head_b[:] = [math.log(3.0), math.log(1.0)]
        pred = forward(p, np.zeros(8), np.zeros(6), np.zeros(7))
        np.testing.assert_allclose(pred.probs, [0.75, 0.25], atol=1e-14)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        p = init_params(DIMS, 4)
        v, t, k = rng.normal(size=8), rng.normal(size=6), rng.normal(size=7)
        base = forward(p, v, t, k).probs
        p.head_b += 17.3
        shifted = forward(p, v, t, k).probs
        assert np.abs(base - shifted).max() < 1e-12

    def test_probs_sum_to_one(self):
        rng = np.random.default_rng(9)
        p = init_params(DIMS, 7)
        for _ in range(20):
            pred = forward(p, rng.normal(size=8), rng.normal(size=6), rng.normal(size=7))
            assert abs(pred.probs.sum() - 1.0) < 1e-12

    def test_shape_mismatch(self):
        p = init_params(DIMS, 1)
        with pytest.raises(ValueError, match="v_feat"):
            forward(p, np.ones(9), np.ones(6), np.ones(7))

    def test_gate_exposed_in_gated_mode_only(self):
        v, t, k = np.ones(8), np.ones(6), np.ones(7)
        assert forward(init_params(DIMS, 0, "gated"), v, t, k).gate is not None
        assert forward(init_params(DIMS, 0, "concat"), v, t, k).gate is None


class TestFocalLoss:
    def test_reduces_to_cross_entropy(self):
        loss, _ = focal_loss(np.array([0.5, 0.5]), 0, gamma=0.0, alpha=(1, 1), epsilon=0.0)
        assert abs(loss - math.log(2.0)) < 1e-12

    def test_perfect_prediction_zero_loss(self):
        for gamma in (0.0, 2.0):
            loss, _ = focal_loss(np.array([0.0, 1.0]), 1, gamma, (1, 1), 0.0)
            assert loss == 0.0

    def test_easy_example_downweighted(self):
        # (1 - 0.9)^2 * -ln(0.9) evaluated straight from the definition
        loss, _ = focal_loss(np.array([0.1, 0.9]), 1, 2.0, (1, 1), 0.0)
        want = 0.1 ** 2 * -math.log(0.9)
        assert abs(loss - want) < 1e-12
        assert abs(loss - 1.05361e-3) < 1e-7

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        for gamma, eps in ((0.0, 0.0), (2.0, 0.1), (1.0, 0.05)):
            logits = rng.normal(size=2)
            alpha = np.array([1.0, 1.4])

            def loss_of(z):
                e = np.exp(z - z.max())
                p = e / e.sum()
                val, _ = focal_loss(p, 1, gamma, alpha, eps)
                return val

            _, dlogits = focal_loss(
                np.exp(logits - logits.max()) / np.exp(logits - logits.max()).sum(),
                1, gamma, alpha, eps,
            )
            h = 1e-6
            for k in range(2):
                zp, zm = logits.copy(), logits.copy()
                zp[k] += h
                zm[k] -= h
                num = (loss_of(zp) - loss_of(zm)) / (2 * h)
                assert abs(dlogits[k] - num) < 1e-6

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-6, 1 - 1e-6))
    def test_equals_cross_entropy_property(self, p1):
        probs = np.array([1.0 - p1, p1])
        for label in (0, 1):
            loss, _ = focal_loss(probs, label, 0.0, (1.0, 1.0), 0.0)
            assert abs(loss - (-math.log(probs[label]))) < 1e-12

    def test_nonnegative_and_monotone(self):
        ps = np.linspace(0.02, 0.98, 49)
        for gamma in (0.0, 1.0, 2.0):
            losses = []
            for p1 in ps:
                loss, _ = focal_loss(np.array([1 - p1, p1]), 1, gamma, (1, 1), 0.0)
                assert loss >= 0.0
                losses.append(loss)
            assert all(a > b for a, b in zip(losses, losses[1:]))

    def test_saturated_prob_stays_finite(self):
        loss, dlogits = focal_loss(np.array([1.0, 0.0]), 1, 2.0, (1, 1), 0.0)
        assert math.isfinite(loss) and np.isfinite(dlogits).all()


class TestBackward:
    def test_zero_dlogits_zero_grads(self):
        rng = np.random.default_rng(3)
        p = init_params(DIMS, 1)
        V, T, K, _ = _rand_inputs(rng)
        cache = forward_batch(p, V, T, K)
        grads = backward(p, cache, np.zeros_like(cache.logits))
        for name, _ in p.tensors():
            assert not grads[name].any()

    @pytest.mark.parametrize("mode", ["gated", "concat"])
    def test_matches_central_differences(self, mode):
        rng = np.random.default_rng(4)
        for trial in range(4):
            p = init_params(DIMS, seed=100 + trial, fusion_mode=mode)
            V, T, K, y = _rand_inputs(rng)
            alpha = np.array([1.0, 1.2])

            def loss_fn():
                c = forward_batch(p, V, T, K)
                val, _ = _focal_batch(c.probs, y, 2.0, alpha, 0.1)
                return val

            cache = forward_batch(p, V, T, K)
            _, dlogits = _focal_batch(cache.probs, y, 2.0, alpha, 0.1)
            grads = backward(p, cache, dlogits)
            h = 1e-5
            for name, arr in p.tensors():
                flat = arr.reshape(-1)
                num = np.zeros_like(flat)
                for i in range(flat.shape[0]):
                    old = flat[i]
                    flat[i] = old + h
                    lp = loss_fn()
                    flat[i] = old - h
                    lm = loss_fn()
                    flat[i] = old
                    num[i] = (lp - lm) / (2 * h)
                ana = grads[name].reshape(-1)
                rel = np.abs(ana - num) / np.maximum(
                    np.maximum(np.abs(ana), np.abs(num)), 1e-8
                )
                assert rel.max() <= 1e-4, f"{mode}/{name}: {rel.max()}"

    def test_linear_in_dlogits(self):
        rng = np.random.default_rng(5)
        p = init_params(DIMS, 6)
        V, T, K, _ = _rand_inputs(rng, n=1)
        cache1 = forward_batch(p, V, T, K)
        dl = rng.normal(size=(1, 2))
        g1 = backward(p, cache1, dl)
        V2, T2, K2 = (np.vstack([V, V]), np.vstack([T, T]), np.vstack([K, K]))
        cache2 = forward_batch(p, V2, T2, K2)
        g2 = backward(p, cache2, np.vstack([dl, dl]))
        for name, _ in p.tensors():
            np.testing.assert_allclose(g2[name], 2.0 * g1[name], rtol=1e-12, atol=1e-15)


class TestAdam:
    def test_first_step_is_signed_lr(self):
        p = init_params(DIMS, 0)
        state = AdamState.for_params(p)
        grads = {name: np.zeros_like(arr) for name, arr in p.tensors()}
        grads["head.b"] = np.array([0.37, -2.9])
        before = p.head_b.copy()
        from freqrag.classifier import Gradients

        adam_step(state, p, Gradients(grads), lr=0.01)
        delta = p.head_b - before
        np.testing.assert_allclose(delta, [-0.01, 0.01], atol=0.01 * 1e-6)
        assert state.t == 1

    def test_zero_gradient_keeps_params(self):
        p = init_params(DIMS, 0)
        snapshot = [arr.copy() for _, arr in p.tensors()]
        state = AdamState.for_params(p)
        from freqrag.classifier import Gradients

        grads = Gradients({name: np.zeros_like(arr) for name, arr in p.tensors()})
        adam_step(state, p, grads, lr=0.5)
        for (_, arr), before in zip(p.tensors(), snapshot):
            np.testing.assert_array_equal(arr, before)
        assert state.t == 1

    def test_quadratic_convergence(self):
        # minimize f(w) = w^2 through the optimizer plumbing
        p = init_params(DIMS, 0)
        p.head_b[:] = [1.0, 0.0]
        state = AdamState.for_params(p)
        from freqrag.classifier import Gradients

        for _ in range(100):
            grads = {name: np.zeros_like(arr) for name, arr in p.tensors()}
            grads["head.b"] = np.array([2.0 * p.head_b[0], 0.0])
            adam_step(state, p, Gradients(grads), lr=0.1)
        assert abs(p.head_b[0]) < 0.5

    def test_non_finite_gradient_rejected(self):
        p = init_params(DIMS, 0)
        state = AdamState.for_params(p)
        from freqrag.classifier import Gradients

        grads = {name: np.zeros_like(arr) for name, arr in p.tensors()}
        grads["head.W"] = np.full_like(p.head_W, np.nan)
        with pytest.raises(NumericError, match="head.W"):
            adam_step(state, p, Gradients(grads), lr=0.1)


class TestCosineAnneal:
    def test_endpoints_and_midpoint(self):
        assert cosine_anneal(0, 30, 1e-4, 0.0) == 1e-4
        assert abs(cosine_anneal(30, 30, 1e-4, 1e-6) - 1e-6) < 1e-20
        assert abs(cosine_anneal(15, 30, 1e-4, 0.0) - 5e-5) < 1e-18

    def test_monotone_decreasing(self):
        lrs = [cosine_anneal(e, 30, 1.0, 0.1) for e in range(31)]
        assert all(a >= b for a, b in zip(lrs, lrs[1:]))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            cosine_anneal(31, 30, 1.0, 0.0)


class TestTrainConfig:
    def test_rejects_zero_epochs(self):
        with pytest.raises(ValueError, match="epochs"):
            TrainConfig(epochs=0).validate()

    def test_rejects_bad_smoothing(self):
        with pytest.raises(ValueError, match="smoothing"):
            TrainConfig(epsilon=1.0).validate()

    def test_roundtrip_dict(self):
        cfg = TrainConfig(alpha=(2.0, 1.0), gamma=1.5, metric="cosine")
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg


class TestTraining:
    def test_deterministic(self, small_synth):
        data, kb = small_synth
        cfg = TrainConfig(epochs=3, proj_dim=8, seed=5)
        p1, h1 = train(data, kb, cfg)
        p2, h2 = train(data, kb, cfg)
        assert h1.epoch_loss == h2.epoch_loss
        assert h1.epoch_accuracy == h2.epoch_accuracy
        for (_, a), (_, b) in zip(p1.tensors(), p2.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_separable_data_learns(self):
        cfg = SynthConfig(
            n_samples=200, d_t=32, d_v=48, d_k=32, n_knowledge=10,
            class_separation=8.0, noise_sigma=1.0, seed=3,
        )
        data, kb = synth_dataset(cfg)
        params, hist = train(data, kb, TrainConfig(proj_dim=32))
        assert hist.epoch_accuracy[-1] >= 0.95

    def test_loss_trend_decreasing(self, small_synth):
        data, kb = small_synth
        _, hist = train(data, kb, TrainConfig(epochs=10, proj_dim=8))
        first = np.mean(hist.epoch_loss[:5])
        last = np.mean(hist.epoch_loss[-5:])
        assert last < first

    def test_single_class_rejected(self, small_synth):
        data, kb = small_synth
        ones = SampleSet(data.d_t, data.d_v, [s for s in data.samples if s.label == 1])
        with pytest.raises(DataError, match="both classes"):
            train(ones, kb, TrainConfig(epochs=1, proj_dim=4))

    @pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")
    def test_divergence_reported_with_location(self, small_synth):
        # lr large enough that activations overflow to inf
        data, kb = small_synth
        cfg = TrainConfig(epochs=2, proj_dim=8, lr0=1e200)
        with pytest.raises(NumericError, match="epoch"):
            train(data, kb, cfg)

    def test_balanced_alpha_resolution(self):
        from freqrag.classifier import resolve_alpha

        labels = np.array([0, 0, 0, 1])
        np.testing.assert_allclose(resolve_alpha("balanced", labels), [4 / 6, 4 / 2])
        np.testing.assert_allclose(resolve_alpha((1.0, 2.0), labels), [1.0, 2.0])


class TestPredict:
    def test_symmetric_head_gives_half(self, small_synth):
        data, kb = small_synth
        cfg = TrainConfig(proj_dim=8)
        params, _ = train(data, kb, TrainConfig(epochs=1, proj_dim=8))
        params.head_W[1] = params.head_W[0]
        params.head_b[:] = 0.0
        p1, _ = predict(params, data.samples[0], kb, cfg)
        assert abs(p1 - 0.5) < 1e-12

    def test_trained_model_classifies_prototype_like_samples(self, small_synth):
        data, kb = small_synth
        cfg = TrainConfig(epochs=15, proj_dim=16, lr0=1e-3)
        params, _ = train(data, kb, cfg)
        hits = 0
        for s in data.samples[:10]:
            p1, _ = predict(params, s, kb, cfg)
            hits += int((p1 >= 0.5) == (s.label == 1))
        assert hits >= 9

    def test_pure_function(self, small_synth):
        data, kb = small_synth
        cfg = TrainConfig(epochs=1, proj_dim=8)
        params, _ = train(data, kb, cfg)
        a = predict(params, data.samples[3], kb, cfg)
        b = predict(params, data.samples[3], kb, cfg)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1].probs, b[1].probs)


class TestCheckpoint:
    @pytest.mark.parametrize("mode", ["gated", "concat"])
    def test_roundtrip_exact(self, tmp_path, mode):
        cfg = TrainConfig(proj_dim=5, fusion_mode=mode)
        dims = ModelDims(8, 6, 5, 7, 2)
        params = init_params(dims, seed=11, fusion_mode=mode)
        path = tmp_path / "model.qfmp"
        save_model(params, cfg, path)
        loaded, loaded_cfg = load_model(path)
        assert loaded_cfg == cfg
        assert loaded.fusion_mode == mode
        for (_, a), (_, b) in zip(params.tensors(), loaded.tensors()):
            np.testing.assert_array_equal(a, b)

    def test_truncated_rejected(self, tmp_path):
        cfg = TrainConfig(proj_dim=5)
        params = init_params(ModelDims(8, 6, 5, 7, 2), 0)
        path = tmp_path / "model.qfmp"
        save_model(params, cfg, path)
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(DataError, match="truncated"):
            load_model(path)

    def test_missing_sidecar_rejected(self, tmp_path):
        cfg = TrainConfig(proj_dim=5)
        params = init_params(ModelDims(8, 6, 5, 7, 2), 0)
        path = tmp_path / "model.qfmp"
        save_model(params, cfg, path)
        (tmp_path / "model.qfmp.json").unlink()
        with pytest.raises(DataError, match="sidecar"):
            load_model(path)
