"""Answer classifier over fused frequency features and retrieved context.

Forward pass (gated mode, the default): each modality's frequency feature is
linearly projected to d_f, the two projections are mixed by a learned
sigmoid gate, the retrieved context vector is projected to d_f, and a dense
head over [h || p_k] produces two-class logits and softmax probabilities.
Concat mode skips the projections/gate and feeds the raw concatenated
frequency features to the head alongside p_k.

Gradients are hand-derived reverse-mode for this fixed graph; embeddings,
spectra, and retrieved vectors are inputs, not parameters, and receive no
gradient.  Optimization is bias-corrected Adam under a cosine-annealed
learning rate.

Frequency features enter the model under the 1/n normalized-transform
convention (bin k divided by the padded length), so each component is an
average rather than a sum: activation scale stays independent of embedding
width and the softmax starts unsaturated, which is what lets a 1e-4
learning rate make progress.  The spectral API itself stays unnormalized.
"""

import json
import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataio import KnowledgeBase, Sample, SampleSet
from .errors import DataError, NumericError
from .fusion import GateParams, ProjectionParams, sigmoid
from .retrieval import fused_query_projector, top_k, topk_avg, METRICS, WEIGHTINGS
from .rng import Rng, derive_seed
from .spectral import next_pow2, to_freq_feature

FUSION_MODES = ("gated", "concat")
QUERY_MODES = ("text", "fused")

CHECKPOINT_MAGIC = b"QFMP"
_TENSOR_ORDER = (
    "proj_v.W", "proj_v.b", "proj_t.W", "proj_t.b",
    "gate.W", "gate.b", "proj_k.W", "proj_k.b", "head.W", "head.b",
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    lr0: float = 1e-4
    lr_min: float = 0.0
    gamma: float = 2.0
    alpha: tuple[float, float] | str = (1.0, 1.0)
    epsilon: float = 0.1
    seed: int = 42
    fusion_mode: str = "gated"
    metric: str = "quantum"
    top_k: int = 5
    proj_dim: int = 256
    topk_weighting: str = "uniform"
    query_mode: str = "text"

    def validate(self) -> "TrainConfig":
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.lr_min < 0 or self.lr_min > self.lr0:
            raise ValueError("lr_min must lie in [0, lr0]")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0 <= self.epsilon < 1:
            raise ValueError("label smoothing must lie in [0, 1)")
        if isinstance(self.alpha, str):
            if self.alpha != "balanced":
                raise ValueError(f"alpha must be two weights or 'balanced', got {self.alpha!r}")
        elif len(self.alpha) != 2 or any(a < 0 for a in self.alpha):
            raise ValueError("alpha must be two non-negative class weights")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.proj_dim < 1:
            raise ValueError("proj_dim must be >= 1")
        if self.fusion_mode not in FUSION_MODES:
            raise ValueError(f"fusion_mode must be one of {FUSION_MODES}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.topk_weighting not in WEIGHTINGS:
            raise ValueError(f"topk_weighting must be one of {WEIGHTINGS}")
        if self.query_mode not in QUERY_MODES:
            raise ValueError(f"query_mode must be one of {QUERY_MODES}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        if not isinstance(self.alpha, str):
            d["alpha"] = list(self.alpha)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("alpha"), list):
            d["alpha"] = tuple(d["alpha"])
        return cls(**d).validate()


@dataclass(frozen=True)
class ModelDims:
    d_vf: int   # image frequency-feature length
    d_tf: int   # text frequency-feature length
    d_f: int    # projection width
    d_k: int    # knowledge key length
    n_classes: int = 2

    def head_in(self, fusion_mode: str) -> int:
        if fusion_mode == "gated":
            return 2 * self.d_f
        return self.d_vf + self.d_tf + self.d_f


@dataclass
class ModelParams:
    dims: ModelDims
    fusion_mode: str
    proj_v: ProjectionParams
    proj_t: ProjectionParams
    gate: GateParams
    proj_k: ProjectionParams
    head_W: np.ndarray
    head_b: np.ndarray

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        """(name, array) pairs in the canonical serialization order."""
        return [
            ("proj_v.W", self.proj_v.W), ("proj_v.b", self.proj_v.b),
            ("proj_t.W", self.proj_t.W), ("proj_t.b", self.proj_t.b),
            ("gate.W", self.gate.W_g), ("gate.b", self.gate.b_g),
            ("proj_k.W", self.proj_k.W), ("proj_k.b", self.proj_k.b),
            ("head.W", self.head_W), ("head.b", self.head_b),
        ]

    def validate(self) -> "ModelParams":
        d = self.dims
        self.proj_v.validate()
        self.proj_t.validate()
        self.gate.validate()
        self.proj_k.validate()
        expect = {
            "proj_v.W": (d.d_f, d.d_vf), "proj_t.W": (d.d_f, d.d_tf),
            "gate.W": (d.d_f, 2 * d.d_f), "proj_k.W": (d.d_f, d.d_k),
            "head.W": (d.n_classes, d.head_in(self.fusion_mode)),
            "head.b": (d.n_classes,),
        }
        for name, arr in self.tensors():
            if name in expect and arr.shape != expect[name]:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expect[name]}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite values")
        return self


def init_params(dims: ModelDims, seed: int, fusion_mode: str = "gated") -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic in the seed.

    Matrices are drawn in serialization order, each filled row-major with
    uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
    """
    if fusion_mode not in FUSION_MODES:
        raise ValueError(f"fusion_mode must be one of {FUSION_MODES}")
    rng = Rng(seed)

    def glorot(n_out: int, n_in: int) -> np.ndarray:
        a = math.sqrt(6.0 / (n_in + n_out))
        flat = [a * (2.0 * rng.next_double() - 1.0) for _ in range(n_out * n_in)]
        return np.array(flat).reshape(n_out, n_in)

    proj_v = ProjectionParams(glorot(dims.d_f, dims.d_vf), np.zeros(dims.d_f))
    proj_t = ProjectionParams(glorot(dims.d_f, dims.d_tf), np.zeros(dims.d_f))
    gate = GateParams(glorot(dims.d_f, 2 * dims.d_f), np.zeros(dims.d_f))
    proj_k = ProjectionParams(glorot(dims.d_f, dims.d_k), np.zeros(dims.d_f))
    head_W = glorot(dims.n_classes, dims.head_in(fusion_mode))
    head_b = np.zeros(dims.n_classes)
    return ModelParams(dims, fusion_mode, proj_v, proj_t, gate, proj_k, head_W, head_b).validate()


# ---------------------------------------------------------------------------
# Forward / loss / backward

@dataclass
class BatchCache:
    """Activations retained for the backward pass (rows = batch)."""

    V: np.ndarray
    T: np.ndarray
    K: np.ndarray
    Pv: np.ndarray | None
    Pt: np.ndarray | None
    G: np.ndarray | None
    Pk: np.ndarray
    X: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


@dataclass(frozen=True)
class Prediction:
    logits: np.ndarray
    probs: np.ndarray
    gate: np.ndarray | None
    cache: BatchCache


def softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward_batch(p: ModelParams, V: np.ndarray, T: np.ndarray, K: np.ndarray) -> BatchCache:
    if p.fusion_mode == "gated":
        Pv = V @ p.proj_v.W.T + p.proj_v.b
        Pt = T @ p.proj_t.W.T + p.proj_t.b
        Z = np.concatenate([Pv, Pt], axis=1) @ p.gate.W_g.T + p.gate.b_g
        G = sigmoid(Z)
        H = Pt + G * (Pv - Pt)
    else:
        Pv = Pt = G = None
        H = np.concatenate([V, T], axis=1)
    Pk = K @ p.proj_k.W.T + p.proj_k.b
    X = np.concatenate([H, Pk], axis=1)
    logits = X @ p.head_W.T + p.head_b
    if not np.isfinite(logits).all():
        raise NumericError("non-finite activations in forward pass")
    probs = softmax_rows(logits)
    return BatchCache(V, T, K, Pv, Pt, G, Pk, X, logits, probs)


def forward(p: ModelParams, v_feat, t_feat, k_agg) -> Prediction:
    """Single-sample forward pass (a batch of one)."""
    rows = []
    for name, vec, want in (
        ("v_feat", v_feat, p.dims.d_vf),
        ("t_feat", t_feat, p.dims.d_tf),
        ("k_agg", k_agg, p.dims.d_k),
    ):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (want,):
            raise ValueError(f"{name} has shape {vec.shape}, expected ({want},)")
        rows.append(vec.reshape(1, -1))
    cache = forward_batch(p, *rows)
    gate = cache.G[0] if cache.G is not None else None
    return Prediction(cache.logits[0], cache.probs[0], gate, cache)


def focal_loss(
    probs: np.ndarray, label: int, gamma: float, alpha, epsilon: float
) -> tuple[float, np.ndarray]:
    """Focal loss with label smoothing, plus its gradient w.r.t. the logits.

    Targets are y_c = (1 - eps) * [c == label] + eps / C; the loss is
    -sum_c alpha_c (1 - p_c)^gamma y_c log p_c, with the log clamped at
    1e-15 so saturated probabilities report a large finite loss rather
    than NaN.
    """
    probs = np.asarray(probs, dtype=np.float64)
    loss, dlogits = _focal_batch(
        probs.reshape(1, -1), np.array([label]), gamma, np.asarray(alpha, dtype=np.float64),
        epsilon,
    )
    return float(loss), dlogits[0]


def _focal_batch(
    probs: np.ndarray, labels: np.ndarray, gamma: float, alpha: np.ndarray, epsilon: float
) -> tuple[float, np.ndarray]:
    """Mean focal loss over rows and per-row dlogits (mean-scaled)."""
    n, c = probs.shape
    targets = np.full((n, c), epsilon / c)
    targets[np.arange(n), labels] += 1.0 - epsilon
    pc = np.clip(probs, 1e-15, 1.0)
    log_p = np.log(pc)
    om = 1.0 - probs
    focal = om ** gamma if gamma != 0.0 else np.ones_like(probs)
    weighted = alpha * targets
    loss = -(weighted * focal * log_p).sum(axis=1).mean()

    # dL/dp_c = alpha_c y_c [gamma (1-p)^(gamma-1) log p - (1-p)^gamma / p]
    if gamma == 0.0:
        dfocal = 0.0
    else:
        dfocal = gamma * np.maximum(om, 1e-15) ** (gamma - 1.0) * log_p
    g = weighted * (dfocal - focal / pc)
    # Through softmax: dz_k = p_k (g_k - sum_c g_c p_c), averaged over rows.
    inner = (g * probs).sum(axis=1, keepdims=True)
    dlogits = probs * (g - inner) / n
    return float(loss), dlogits


@dataclass
class Gradients:
    by_name: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.by_name[name]


def backward(p: ModelParams, cache: BatchCache, dlogits: np.ndarray) -> Gradients:
    """Reverse-mode gradients for every parameter tensor.

    dlogits carries any batch-mean scaling; inputs receive no gradient.
    """
    g: dict[str, np.ndarray] = {}
    g["head.W"] = dlogits.T @ cache.X
    g["head.b"] = dlogits.sum(axis=0)
    dX = dlogits @ p.head_W

    d_f = p.dims.d_f
    h_dim = cache.X.shape[1] - d_f
    dH = dX[:, :h_dim]
    dPk = dX[:, h_dim:]
    g["proj_k.W"] = dPk.T @ cache.K
    g["proj_k.b"] = dPk.sum(axis=0)

    if p.fusion_mode == "gated":
        if cache.G is None or cache.Pv is None or cache.Pt is None:
            raise ValueError("cache is missing gated-fusion activations")
        G, Pv, Pt = cache.G, cache.Pv, cache.Pt
        dG = dH * (Pv - Pt)
        dZ = dG * G * (1.0 - G)
        cat = np.concatenate([Pv, Pt], axis=1)
        g["gate.W"] = dZ.T @ cat
        g["gate.b"] = dZ.sum(axis=0)
        dPv = dH * G + dZ @ p.gate.W_g[:, :d_f]
        dPt = dH * (1.0 - G) + dZ @ p.gate.W_g[:, d_f:]
        g["proj_v.W"] = dPv.T @ cache.V
        g["proj_v.b"] = dPv.sum(axis=0)
        g["proj_t.W"] = dPt.T @ cache.T
        g["proj_t.b"] = dPt.sum(axis=0)
    else:
        for name, arr in p.tensors():
            if name.startswith(("proj_v", "proj_t", "gate")):
                g[name] = np.zeros_like(arr)
    return Gradients(g)


# ---------------------------------------------------------------------------
# Optimizer

@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={name: np.zeros_like(arr) for name, arr in params.tensors()},
            v={name: np.zeros_like(arr) for name, arr in params.tensors()},
        )


def adam_step(state: AdamState, params: ModelParams, grads: Gradients, lr: float) -> None:
    """One bias-corrected Adam update, in place on params and state."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, arr in params.tensors():
        grad = grads[name]
        if not np.isfinite(grad).all():
            raise NumericError(f"non-finite gradient for {name} at step {state.t}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * (grad * grad)
        arr -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def cosine_anneal(epoch: int, total_epochs: int, lr0: float, lr_min: float) -> float:
    """Cosine decay from lr0 at epoch 0 toward lr_min at epoch == total."""
    if not 0 <= epoch <= total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs}]")
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + math.cos(math.pi * epoch / total_epochs))


# ---------------------------------------------------------------------------
# Feature pipeline

def scaled_freq_feature(x: np.ndarray) -> np.ndarray:
    """Frequency feature under the 1/n normalized-transform convention."""
    d = np.asarray(x).shape[0]
    return to_freq_feature(x) / float(next_pow2(d))


@dataclass
class FeatureSet:
    """Per-sample model inputs, precomputed once per dataset."""

    V: np.ndarray        # (n, d_vf) scaled image frequency features
    T: np.ndarray        # (n, d_tf) scaled text frequency features
    K: np.ndarray        # (n, d_k) aggregated retrieved context
    labels: np.ndarray   # (n,) int

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.V.shape[1], self.T.shape[1], self.K.shape[1]


def _query_projector(cfg: TrainConfig, d_vf: int, d_tf: int, d_k: int):
    if cfg.query_mode == "text":
        return None
    return fused_query_projector(d_vf + d_tf, d_k, cfg.seed)


def _retrieval_query(sample: Sample, v_feat, t_feat, projector) -> np.ndarray:
    if projector is None:
        return sample.text_emb
    return projector(np.concatenate([v_feat, t_feat]))


def precompute_features(data: SampleSet, kb: KnowledgeBase, cfg: TrainConfig) -> FeatureSet:
    """Frequency features and retrieved context for every sample.

    Retrieval is frozen: scores are piecewise constant in the inputs, so
    the aggregated context is computed once and treated as a constant
    during training.
    """
    if not data.samples:
        raise DataError("dataset has no samples")
    if cfg.query_mode == "text" and data.d_t != kb.d_k:
        raise DataError(
            f"text-query retrieval needs d_t == d_k, got {data.d_t} != {kb.d_k}"
        )
    V, T, K = [], [], []
    projector = None
    for i, s in enumerate(data.samples):
        v_feat = scaled_freq_feature(s.image_emb)
        t_feat = scaled_freq_feature(s.text_emb)
        if i == 0:
            projector = _query_projector(cfg, v_feat.shape[0], t_feat.shape[0], kb.d_k)
        query = _retrieval_query(s, v_feat, t_feat, projector)
        hits = top_k(query, kb, cfg.top_k, cfg.metric)
        ctx = topk_avg(kb, hits, cfg.topk_weighting)
        V.append(v_feat)
        T.append(t_feat)
        K.append(ctx.k_agg)
    return FeatureSet(
        V=np.stack(V), T=np.stack(T), K=np.stack(K),
        labels=np.array(data.labels(), dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# Training

@dataclass
class TrainHistory:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)
    epoch_lr: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "epoch_loss": self.epoch_loss,
            "epoch_accuracy": self.epoch_accuracy,
            "epoch_lr": self.epoch_lr,
        }


def resolve_alpha(alpha, labels: np.ndarray) -> np.ndarray:
    """Class-weight vector; 'balanced' uses inverse class frequency."""
    if isinstance(alpha, str):
        counts = np.bincount(labels, minlength=2).astype(np.float64)
        return labels.shape[0] / (2.0 * counts)
    return np.asarray(alpha, dtype=np.float64)


def train(
    data: SampleSet, kb: KnowledgeBase, cfg: TrainConfig
) -> tuple[ModelParams, TrainHistory]:
    """Fit the classifier; deterministic in (data, kb, cfg)."""
    cfg.validate()
    labels = data.labels()
    if not data.samples:
        raise DataError("training set is empty")
    if len(set(labels)) < 2:
        raise DataError("training set must contain both classes")
    if not kb.entries:
        raise DataError("knowledge base is empty")

    feats = precompute_features(data, kb, cfg)
    d_vf, d_tf, d_k = feats.dims
    dims = ModelDims(d_vf=d_vf, d_tf=d_tf, d_f=cfg.proj_dim, d_k=d_k)
    params = init_params(dims, cfg.seed, cfg.fusion_mode)
    adam = AdamState.for_params(params)
    alpha = resolve_alpha(cfg.alpha, feats.labels)
    shuffle_rng = Rng(derive_seed(cfg.seed, "shuffle"))

    n = len(data.samples)
    history = TrainHistory()
    for epoch in range(cfg.epochs):
        lr = cosine_anneal(epoch, cfg.epochs, cfg.lr0, cfg.lr_min)
        order = list(range(n))
        shuffle_rng.shuffle(order)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            V, T, K = feats.V[idx], feats.T[idx], feats.K[idx]
            y = feats.labels[idx]
            try:
                cache = forward_batch(params, V, T, K)
                loss, dlogits = _focal_batch(cache.probs, y, cfg.gamma, alpha, cfg.epsilon)
            except NumericError as exc:
                raise NumericError(
                    f"training diverged at epoch {epoch}, "
                    f"batch {start // cfg.batch_size}: {exc}"
                ) from exc
            if not math.isfinite(loss):
                raise NumericError(
                    f"training diverged: non-finite loss at epoch {epoch}, "
                    f"batch {start // cfg.batch_size}"
                )
            correct += int((cache.probs.argmax(axis=1) == y).sum())
            loss_sum += loss * len(idx)
            grads = backward(params, cache, dlogits)
            adam_step(adam, params, grads, lr)
        history.epoch_loss.append(loss_sum / n)
        history.epoch_accuracy.append(correct / n)
        history.epoch_lr.append(lr)
    return params, history


def predict(
    params: ModelParams, sample: Sample, kb: KnowledgeBase, cfg: TrainConfig
) -> tuple[float, Prediction]:
    """Class-1 probability and full prediction for one sample.

    Runs the identical feature path as training: scaled frequency features
    plus frozen retrieval.
    """
    v_feat = scaled_freq_feature(sample.image_emb)
    t_feat = scaled_freq_feature(sample.text_emb)
    projector = _query_projector(cfg, v_feat.shape[0], t_feat.shape[0], kb.d_k)
    query = _retrieval_query(sample, v_feat, t_feat, projector)
    hits = top_k(query, kb, cfg.top_k, cfg.metric)
    ctx = topk_avg(kb, hits, cfg.topk_weighting)
    pred = forward(params, v_feat, t_feat, ctx.k_agg)
    return float(pred.probs[1]), pred


# ---------------------------------------------------------------------------
# Checkpoints

def save_model(params: ModelParams, cfg: TrainConfig, path) -> None:
    """Write the QFMP checkpoint plus a JSON sidecar with the train config.

    Layout: magic QFMP, u16 version=1, u32 dims (d_vf, d_tf, d_f, d_k,
    n_classes), then each tensor in `tensors()` order as u32 rows, u32 cols,
    row-major f64-LE (biases are 1 x n).
    """
    params.validate()
    d = params.dims
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HIIIII", 1, d.d_vf, d.d_tf, d.d_f, d.d_k, d.n_classes))
        for _, arr in params.tensors():
            mat = arr.reshape(1, -1) if arr.ndim == 1 else arr
            fh.write(struct.pack("<II", mat.shape[0], mat.shape[1]))
            fh.write(np.asarray(mat, dtype="<f8").tobytes())
    sidecar = {"config": cfg.to_dict(), "fusion_mode": cfg.fusion_mode}
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_model(path) -> tuple[ModelParams, TrainConfig]:
    try:
        with open(str(path) + ".json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        cfg = TrainConfig.from_dict(sidecar["config"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: missing or invalid checkpoint sidecar: {exc}") from exc

    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: bad magic, not a QFMP checkpoint")
    version, d_vf, d_tf, d_f, d_k, n_classes = struct.unpack_from("<HIIIII", buf, 4)
    if version != 1:
        raise DataError(f"{path}: unsupported QFMP version {version}")
    pos = 4 + struct.calcsize("<HIIIII")

    arrays = {}
    for name in _TENSOR_ORDER:
        if pos + 8 > len(buf):
            raise DataError(f"{path}: truncated checkpoint at {name}")
        rows, cols = struct.unpack_from("<II", buf, pos)
        pos += 8
        nbytes = 8 * rows * cols
        if pos + nbytes > len(buf):
            raise DataError(f"{path}: truncated tensor data for {name}")
        mat = np.frombuffer(buf[pos : pos + nbytes], dtype="<f8").reshape(rows, cols).copy()
        pos += nbytes
        arrays[name] = mat[0] if name.endswith(".b") else mat
    if pos != len(buf):
        raise DataError(f"{path}: {len(buf) - pos} trailing bytes")

    dims = ModelDims(d_vf, d_tf, d_f, d_k, n_classes)
    params = ModelParams(
        dims=dims,
        fusion_mode=cfg.fusion_mode,
        proj_v=ProjectionParams(arrays["proj_v.W"], arrays["proj_v.b"]),
        proj_t=ProjectionParams(arrays["proj_t.W"], arrays["proj_t.b"]),
        gate=GateParams(arrays["gate.W"], arrays["gate.b"]),
        proj_k=ProjectionParams(arrays["proj_k.W"], arrays["proj_k.b"]),
        head_W=arrays["head.W"],
        head_b=arrays["head.b"],
    )
    try:
        params.validate()
    except ValueError as exc:
        raise DataError(f"{path}: inconsistent checkpoint shapes: {exc}") from exc
    return params, cfg
