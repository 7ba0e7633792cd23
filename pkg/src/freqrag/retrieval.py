"""Knowledge retrieval by state-overlap or cosine similarity.

A vector is "encoded" as a unit-L2 amplitude vector; the overlap score
between two encodings is the squared inner product, which for real vectors
is the squared cosine of the raw inputs (scale-invariant, sign-blind,
always in [0, 1]).  Retrieval is a deterministic linear scan: score every
key, keep the k best, break ties by ascending index.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .dataio import KnowledgeBase
from .errors import DataError
from .rng import Rng, derive_seed

METRICS = ("quantum", "cosine")
WEIGHTINGS = ("uniform", "score")

_NORM_FLOOR = 1e-12


def _unit(x: np.ndarray) -> np.ndarray:
    nrm = math.sqrt(float(np.dot(x, x)))
    if not math.isfinite(nrm):
        raise DataError("non-finite vector cannot be encoded")
    if nrm <= _NORM_FLOOR:
        raise DataError("zero vector has no direction to encode")
    return x / nrm


@dataclass(frozen=True)
class QuantumState:
    """Unit-L2 amplitude vector."""

    amplitudes: np.ndarray

    def validate(self) -> "QuantumState":
        nrm = math.sqrt(float(np.dot(self.amplitudes, self.amplitudes)))
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"amplitudes have norm {nrm}, expected 1")
        return self


@dataclass(frozen=True)
class RetrievalHit:
    index: int
    score: float


@dataclass(frozen=True)
class RetrievedContext:
    k_agg: np.ndarray
    hits: tuple[RetrievalHit, ...]


def amplitude_encode(x) -> QuantumState:
    """Normalize a non-zero real vector onto the unit sphere."""
    x = np.asarray(x, dtype=np.float64)
    return QuantumState(_unit(x))


def quantum_similarity(a: QuantumState, b: QuantumState) -> float:
    """Squared overlap of two encoded states, in [0, 1]."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ValueError(
            f"state dimensions differ: {a.amplitudes.shape} vs {b.amplitudes.shape}"
        )
    d = float(np.dot(a.amplitudes, b.amplitudes))
    d = max(-1.0, min(1.0, d))
    return d * d


def cosine_similarity(x, y) -> float:
    """Cosine of the angle between two non-zero vectors, in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"vector dimensions differ: {x.shape} vs {y.shape}")
    nx = math.sqrt(float(np.dot(x, x)))
    ny = math.sqrt(float(np.dot(y, y)))
    if nx <= _NORM_FLOOR or ny <= _NORM_FLOOR:
        raise DataError("cosine similarity of a zero vector is undefined")
    c = float(np.dot(x, y)) / (nx * ny)
    return max(-1.0, min(1.0, c))


def _unit_keys(kb: KnowledgeBase) -> list[np.ndarray]:
    # cached on the instance; entries are immutable after load
    cached = getattr(kb, "_unit_keys_cache", None)
    if cached is not None and len(cached) == len(kb.entries):
        return cached
    keys = [_unit(e.key_emb) for e in kb.entries]
    kb._unit_keys_cache = keys  # type: ignore[attr-defined]
    return keys


def top_k(query, kb: KnowledgeBase, k: int, metric: str = "quantum") -> list[RetrievalHit]:
    """The k highest-scoring knowledge entries for a query.

    Scores every entry (ascending-index tie-break, fewer than k entries
    returns them all); deterministic for identical inputs.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if not kb.entries:
        raise DataError("cannot retrieve from an empty knowledge base")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (kb.d_k,):
        raise DataError(f"query length {query.shape} does not match d_k={kb.d_k}")

    if metric == "quantum":
        q = _unit(query)
        scores = []
        for key in _unit_keys(kb):
            d = float(np.dot(key, q))
            d = max(-1.0, min(1.0, d))
            scores.append(d * d)
    else:
        scores = [cosine_similarity(query, e.key_emb) for e in kb.entries]

    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [RetrievalHit(i, scores[i]) for i in order[: min(k, len(scores))]]


def topk_avg(
    kb: KnowledgeBase, hits: list[RetrievalHit], weighting: str = "uniform"
) -> RetrievedContext:
    """Aggregate hit keys into one context vector.

    "uniform" averages the raw key vectors; "score" weights them by their
    similarity scores (falling back to uniform when all scores are zero).
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    if not hits:
        raise ValueError("cannot aggregate an empty hit list")
    for h in hits:
        if not 0 <= h.index < len(kb.entries):
            raise ValueError(f"hit index {h.index} out of range")
    keys = np.stack([kb.entries[h.index].key_emb for h in hits])
    if weighting == "score":
        w = np.array([h.score for h in hits], dtype=np.float64)
        total = float(w.sum())
        k_agg = (w @ keys) / total if total > 0 else keys.mean(axis=0)
    else:
        k_agg = keys.mean(axis=0)
    ordered = tuple(sorted(hits, key=lambda h: (-h.score, h.index)))
    return RetrievedContext(k_agg=k_agg, hits=ordered)


@dataclass(frozen=True)
class FusedQueryProjector:
    """Frozen orthonormal-column projection of the fused frequency feature
    down to key space, for the alternative retrieval query mode.

    Frozen because top-k selection is piecewise constant; there is no
    gradient that could train it.
    """

    matrix: np.ndarray = field(repr=False)  # (d_in, d_k), orthonormal columns

    def __call__(self, fused: np.ndarray) -> np.ndarray:
        return self.matrix.T @ fused


@functools.lru_cache(maxsize=8)
def fused_query_projector(d_in: int, d_k: int, seed: int) -> FusedQueryProjector:
    """Build (or fetch, it is a pure function) the projector for these dims."""
    if d_in < d_k:
        raise ValueError(f"cannot project {d_in} dims onto {d_k} orthonormal columns")
    rng = Rng(derive_seed(seed, "query-projection"))
    g = np.array(rng.gauss_list(d_in * d_k)).reshape(d_in, d_k)
    q, _ = np.linalg.qr(g)
    return FusedQueryProjector(q)
