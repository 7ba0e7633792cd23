"""Acceptance gate: one test per criterion, each printing a pass line and
enforcing its stated tolerance and runtime budget.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import math
import time

import numpy as np
import pytest

from freqrag.classifier import (
    ModelDims,
    TrainConfig,
    _focal_batch,
    backward,
    focal_loss,
    forward_batch,
    init_params,
)
from freqrag.cli import main
from freqrag.dataio import KnowledgeBase, KnowledgeEntry, SynthConfig, synth_dataset
from freqrag.evaluation import (
    ConfusionMatrix,
    cross_validate,
    prf1,
    roc_auc,
    stratified_folds,
)
from freqrag.retrieval import amplitude_encode, cosine_similarity, quantum_similarity, top_k
from freqrag.rng import Rng
from freqrag.spectral import irfft, power_spectrum, rfft


def _passed(name: str, elapsed: float, budget: float) -> None:
    print(f"ACCEPTANCE PASS - {name} ({elapsed:.2f}s, budget {budget:.0f}s)")
    assert elapsed < budget, f"{name}: {elapsed:.2f}s exceeded {budget:.0f}s budget"


def test_criterion_paper_arithmetic_reproduction():
    m = ConfusionMatrix(tp=93, tn=312, fp=19, fn=26)
    t0 = time.perf_counter()
    pos = prf1(m, positive_class=1)
    neg = prf1(m, positive_class=0)
    elapsed = time.perf_counter() - t0
    for got, want in (
        (pos.accuracy, 0.9000),
        (pos.precision, 0.8304),
        (pos.recall, 0.7815),
        (pos.f1, 0.8052),
        (neg.precision, 0.9231),
        (neg.recall, 0.9426),
        (neg.f1, 0.9327),
    ):
        assert abs(got - want) < 5e-5, f"{got} vs {want}"
    _passed("paper-arithmetic reproduction", elapsed, 0.001)


def test_criterion_fft_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    for log_n in range(2, 13):  # 4 .. 4096
        n = 1 << log_n
        xs = rng.uniform(-1.0, 1.0, size=(50, n))
        k = np.arange(n // 2 + 1)
        j = np.arange(n)
        w = np.exp(-2j * np.pi * np.outer(k, j) / n)
        refs = xs @ w.T
        for x, ref in zip(xs, refs):
            s = rfft(x)
            assert np.abs(s.re - ref.real).max() < 1e-9, f"n={n}"
            assert np.abs(s.im - ref.imag).max() < 1e-9, f"n={n}"
            # round-trip and energy identities at the same tolerance
            assert np.abs(irfft(s) - x).max() < 1e-9
            p = power_spectrum(s)
            lhs = float(x @ x)
            rhs = (p[0] + 2.0 * p[1:-1].sum() + p[-1]) / n
            assert abs(lhs - rhs) / abs(lhs) < 1e-9
    _passed("fft matches direct transform", time.perf_counter() - t0, 30.0)


def test_criterion_quantum_similarity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(1000):
        d = int(rng.integers(2, 24))
        x = rng.normal(size=d) * 10.0 ** float(rng.integers(-2, 3))
        y = rng.normal(size=d) * 10.0 ** float(rng.integers(-2, 3))
        sq = quantum_similarity(amplitude_encode(x), amplitude_encode(y))
        assert 0.0 <= sq <= 1.0
        assert abs(sq - cosine_similarity(x, y) ** 2) < 1e-12

    # ranking is invariant to rescaling any key or the query
    keys = rng.normal(size=(60, 8))
    kb = KnowledgeBase(8, [KnowledgeEntry(f"e{i}", k, "") for i, k in enumerate(keys)])
    query = rng.normal(size=8)
    base = [h.index for h in top_k(query, kb, 11, "quantum")]
    for trial in range(20):
        scales = rng.choice([-7.0, -1.5, -0.1, 0.2, 3.0, 40.0], size=60)
        kb2 = KnowledgeBase(
            8,
            [KnowledgeEntry(f"e{i}", k * scales[i], "") for i, k in enumerate(keys)],
        )
        q_scale = float(rng.choice([-2.5, 0.3, 11.0]))
        assert [h.index for h in top_k(query * q_scale, kb2, 11, "quantum")] == base
    _passed("fidelity equals squared cosine", time.perf_counter() - t0, 5.0)


def test_criterion_retrieval_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    for instance in range(100):
        n = int(rng.integers(1, 1001))
        d = int(rng.integers(2, 10))
        keys = rng.normal(size=(n, d))
        # force exact ties through duplicated keys
        if n >= 4:
            keys[n // 2] = keys[0]
            keys[-1] = keys[1] * 2.0
        kb = KnowledgeBase(
            d, [KnowledgeEntry(f"e{i}", k, "") for i, k in enumerate(keys)]
        )
        query = rng.normal(size=d)
        metric = ("quantum", "cosine")[instance % 2]
        if metric == "quantum":
            q = amplitude_encode(query)
            scores = [
                quantum_similarity(q, amplitude_encode(e.key_emb)) for e in kb.entries
            ]
        else:
            scores = [cosine_similarity(query, e.key_emb) for e in kb.entries]
        order = sorted(range(n), key=lambda i: (-scores[i], i))
        for k in (1, 5, 17):
            hits = top_k(query, kb, k, metric)
            want = [(i, scores[i]) for i in order[: min(k, n)]]
            assert [(h.index, h.score) for h in hits] == want
    _passed("top-k equals full-sort brute force", time.perf_counter() - t0, 10.0)


@pytest.mark.parametrize("mode", ["gated", "concat"])
def test_criterion_gradient_check(mode):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    dims = ModelDims(d_vf=10, d_tf=8, d_f=6, d_k=7, n_classes=2)
    for instance in range(20):
        params = init_params(dims, seed=1000 + instance, fusion_mode=mode)
        n = 3
        V = rng.normal(size=(n, dims.d_vf))
        T = rng.normal(size=(n, dims.d_tf))
        K = rng.normal(size=(n, dims.d_k))
        y = rng.integers(0, 2, size=n)
        alpha = np.array([1.0, 1.3])

        def batch_loss():
            c = forward_batch(params, V, T, K)
            val, _ = _focal_batch(c.probs, y, 2.0, alpha, 0.1)
            return val

        cache = forward_batch(params, V, T, K)
        _, dlogits = _focal_batch(cache.probs, y, 2.0, alpha, 0.1)
        grads = backward(params, cache, dlogits)
        h = 1e-5
        for name, arr in params.tensors():
            flat = arr.reshape(-1)
            num = np.empty_like(flat)
            for i in range(flat.shape[0]):
                orig = flat[i]
                flat[i] = orig + h
                up = batch_loss()
                flat[i] = orig - h
                down = batch_loss()
                flat[i] = orig
                num[i] = (up - down) / (2.0 * h)
            ana = grads[name].reshape(-1)
            rel = np.abs(ana - num) / np.maximum(
                np.maximum(np.abs(ana), np.abs(num)), 1e-8
            )
            assert rel.max() <= 1e-4, f"{mode}/{name}: rel {rel.max():.2e}"
    _passed(f"gradients match finite differences ({mode})", time.perf_counter() - t0, 60.0)


def test_criterion_loss_reductions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    for _ in range(1000):
        p1 = float(rng.uniform(1e-9, 1.0 - 1e-9))
        probs = np.array([1.0 - p1, p1])
        label = int(rng.integers(0, 2))
        loss, _ = focal_loss(probs, label, gamma=0.0, alpha=(1.0, 1.0), epsilon=0.0)
        assert abs(loss - (-math.log(probs[label]))) < 1e-12
    for gamma in (0.0, 1.0, 2.0):
        loss, _ = focal_loss(np.array([0.0, 1.0]), 1, gamma, (1.0, 1.0), 0.0)
        assert loss == 0.0
    _passed("focal loss reduces to cross-entropy", time.perf_counter() - t0, 5.0)


def test_criterion_roc_auc_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(13)
    for _ in range(200):
        n = int(rng.integers(2, 501))
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        # coarse score grid forces plenty of exact ties
        s = rng.integers(0, 8, size=n).astype(np.float64) / 7.0
        got = roc_auc(y.tolist(), s.tolist())
        pos = s[y == 1][:, None]
        neg = s[y == 0][None, :]
        wins = float((pos > neg).sum())
        ties = float((pos == neg).sum())
        want = (wins + 0.5 * ties) / (pos.shape[0] * neg.shape[1])
        assert got == want
    assert roc_auc([0, 0, 1, 1], [0.0, 0.1, 0.5, 0.9]) == 1.0
    assert roc_auc([0, 1, 0, 1], [0.3, 0.3, 0.3, 0.3]) == 0.5
    _passed("rank AUC equals pair counting", time.perf_counter() - t0, 30.0)


def test_criterion_end_to_end_learning():
    t0 = time.perf_counter()
    data, kb = synth_dataset(
        SynthConfig(n_samples=400, class_separation=8.0, noise_sigma=1.0, seed=42)
    )
    report = cross_validate(data, kb, TrainConfig(), folds=5)
    avg = report.averages()
    elapsed = time.perf_counter() - t0
    assert avg["accuracy"] >= 0.90, f"average accuracy {avg['accuracy']:.4f}"
    assert avg["roc_auc"] >= 0.95, f"average AUC {avg['roc_auc']:.4f}"
    _passed(
        f"end-to-end learning (acc {avg['accuracy']:.3f}, auc {avg['roc_auc']:.3f})",
        elapsed, 600.0,
    )


def test_criterion_cv_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    synth_out = tmp_path / "data"
    assert main(
        ["synth", "--n", "24", "--d-t", "16", "--d-v", "16", "--d-k", "16",
         "--n-knowledge", "6", "--seed", "5", "--out", str(synth_out)]
    ) == 0
    args = [
        "cv", "--data", str(synth_out / "dataset.qfse"),
        "--knowledge", str(synth_out / "knowledge.qfkb"),
        "--folds", "2", "--epochs", "2", "--proj-dim", "8", "--seed", "9",
    ]
    assert main(args + ["--out", str(tmp_path / "r1")]) == 0
    assert main(args + ["--out", str(tmp_path / "r2")]) == 0
    capsys.readouterr()
    b1 = (tmp_path / "r1" / "report.json").read_bytes()
    b2 = (tmp_path / "r2" / "report.json").read_bytes()
    assert b1 == b2
    json.loads(b1)  # well-formed
    _passed("repeated cv is byte-identical", time.perf_counter() - t0, 60.0)


def test_criterion_stratification_balance():
    t0 = time.perf_counter()
    rng = Rng(314159)
    ks = (2, 5, 10)
    for trial in range(100):
        k = ks[trial % 3]
        n0 = k + rng.below(120)
        n1 = k + rng.below(120)
        labels = [0] * n0 + [1] * n1
        rng.shuffle(labels)
        fa = stratified_folds(labels, k, seed=rng.next_u64())
        for cls in (0, 1):
            counts = [
                sum(1 for i in fa.fold_indices(f) if labels[i] == cls)
                for f in range(k)
            ]
            assert max(counts) - min(counts) <= 1, f"k={k} class={cls}: {counts}"
    _passed("stratified folds balance classes", time.perf_counter() - t0, 10.0)
