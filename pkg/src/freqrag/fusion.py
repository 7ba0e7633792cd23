"""Fusion of the two modality features.

Two modes exist downstream: plain concatenation of the frequency features,
and a learned convex gate over linearly projected features.  The gate is
element-wise: g = sigmoid(W_g [p_v || p_t] + b_g), h = p_t + g * (p_v - p_t),
which equals g*p_v + (1-g)*p_t but is exact when the inputs coincide.
"""

from dataclasses import dataclass

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ProjectionParams:
    """Affine map x -> W x + b with W of shape (d_out, d_in)."""

    W: np.ndarray
    b: np.ndarray

    @property
    def d_out(self) -> int:
        return self.W.shape[0]

    @property
    def d_in(self) -> int:
        return self.W.shape[1]

    def validate(self) -> "ProjectionParams":
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent projection shapes {self.W.shape} / {self.b.shape}")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ValueError("non-finite projection parameters")
        return self


@dataclass
class GateParams:
    """Gate weights: W_g of shape (d_f, 2*d_f), b_g of shape (d_f,)."""

    W_g: np.ndarray
    b_g: np.ndarray

    @property
    def d_f(self) -> int:
        return self.W_g.shape[0]

    def validate(self) -> "GateParams":
        if (
            self.W_g.ndim != 2
            or self.W_g.shape[1] != 2 * self.W_g.shape[0]
            or self.b_g.shape != (self.W_g.shape[0],)
        ):
            raise ValueError(f"inconsistent gate shapes {self.W_g.shape} / {self.b_g.shape}")
        if not (np.isfinite(self.W_g).all() and np.isfinite(self.b_g).all()):
            raise ValueError("non-finite gate parameters")
        return self


def concat_fuse(v_freq, t_freq) -> np.ndarray:
    """[v_freq || t_freq]."""
    return np.concatenate(
        [np.asarray(v_freq, dtype=np.float64), np.asarray(t_freq, dtype=np.float64)]
    )


def project(p: ProjectionParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.d_in,):
        raise ValueError(f"projection expects length {p.d_in}, got {x.shape}")
    return p.W @ x + p.b


def gated_fuse(g: GateParams, p_v, p_t) -> tuple[np.ndarray, np.ndarray]:
    """Convex per-dimension mix of two projected features.

    Returns (h, gate) with gate = sigmoid(W_g [p_v || p_t] + b_g) and
    h = p_t + gate * (p_v - p_t).
    """
    p_v = np.asarray(p_v, dtype=np.float64)
    p_t = np.asarray(p_t, dtype=np.float64)
    if p_v.shape != p_t.shape or p_v.shape != (g.d_f,):
        raise ValueError(
            f"gated fusion expects two length-{g.d_f} vectors, got {p_v.shape}/{p_t.shape}"
        )
    gate = sigmoid(g.W_g @ np.concatenate([p_v, p_t]) + g.b_g)
    h = p_t + gate * (p_v - p_t)
    return h, gate
