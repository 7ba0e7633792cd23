"""Real-input FFT on power-of-two lengths and frequency-feature layout.

The forward transform is unnormalized, bins[k] = sum_j x[j] * exp(-2*pi*i*j*k/n)
for k = 0..n/2; the inverse carries the 1/n factor.  Butterflies run on one of
two interchangeable kernels: a compiled extension when built, else a numpy
fallback (set FREQRAG_PURE_PYTHON=1 to force the fallback).  Both consume the
same precomputed bit-reversal and twiddle tables and give bit-identical
output.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError

if os.environ.get("FREQRAG_PURE_PYTHON"):
    from . import _kernels_py as _kernel
else:
    try:
        from . import _kernels as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _kernel


def active_backend() -> str:
    """Name of the butterfly kernel in use: 'compiled' or 'python'."""
    return _kernel.BACKEND


def next_pow2(n: int) -> int:
    """Smallest power of two >= max(n, 2)."""
    if n < 1:
        raise ValueError("length must be positive")
    return max(2, 1 << (n - 1).bit_length())


@dataclass(frozen=True)
class _Plan:
    n: int
    bitrev: np.ndarray   # int64, length n, an involution
    tw_re: np.ndarray    # cos(-2*pi*k/n), k in [0, n/2)
    tw_im: np.ndarray    # sin(-2*pi*k/n)


_PLANS: dict[int, _Plan] = {}


def _plan(n: int) -> _Plan:
    plan = _PLANS.get(n)
    if plan is None:
        bits = n.bit_length() - 1
        rev = np.zeros(n, dtype=np.int64)
        for i in range(1, n):
            rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (bits - 1))
        ang = (-2.0 * math.pi / n) * np.arange(n // 2, dtype=np.float64)
        plan = _Plan(n, rev, np.cos(ang), np.sin(ang))
        _PLANS[n] = plan
    return plan


@dataclass(frozen=True)
class ComplexSpectrum:
    """Half spectrum of a real length-n signal: n/2 + 1 (re, im) bins.

    Real-input symmetry forces im[0] = im[n/2] = 0.
    """

    n: int
    re: np.ndarray
    im: np.ndarray

    def validate(self) -> "ComplexSpectrum":
        if self.n < 2 or self.n & (self.n - 1):
            raise DataError(f"spectrum length {self.n} is not a power of two >= 2")
        nbins = self.n // 2 + 1
        if self.re.shape != (nbins,) or self.im.shape != (nbins,):
            raise DataError(
                f"expected {nbins} bins for n={self.n}, "
                f"got {self.re.shape[0]}/{self.im.shape[0]}"
            )
        if not (np.isfinite(self.re).all() and np.isfinite(self.im).all()):
            raise DataError("spectrum contains non-finite bins")
        if self.im[0] != 0.0 or self.im[-1] != 0.0:
            raise DataError("real-input spectrum must have zero imaginary DC/Nyquist bins")
        return self

    @property
    def bins(self) -> list[tuple[float, float]]:
        return list(zip(self.re.tolist(), self.im.tolist()))


def _check_real_input(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DataError("input must be a 1-D vector of length >= 2")
    if x.shape[0] & (x.shape[0] - 1):
        raise DataError(f"length {x.shape[0]} is not a power of two")
    if not np.isfinite(x).all():
        raise DataError("input contains non-finite values")
    return x


def rfft(x) -> ComplexSpectrum:
    """Forward transform of a real power-of-two-length vector."""
    x = _check_real_input(x)
    n = x.shape[0]
    plan = _plan(n)
    re = x.copy()
    im = np.zeros(n, dtype=np.float64)
    _kernel.fft_inplace(re, im, plan.bitrev, plan.tw_re, plan.tw_im, False)
    re_half = re[: n // 2 + 1].copy()
    im_half = im[: n // 2 + 1].copy()
    # Exactly zero by symmetry; pinned so the invariant holds bitwise.
    im_half[0] = 0.0
    im_half[-1] = 0.0
    return ComplexSpectrum(n, re_half, im_half)


def irfft(s: ComplexSpectrum) -> np.ndarray:
    """Inverse of :func:`rfft` (1/n-scaled), reconstructing the real signal."""
    s.validate()
    n = s.n
    half = n // 2
    re = np.empty(n, dtype=np.float64)
    im = np.empty(n, dtype=np.float64)
    re[: half + 1] = s.re
    im[: half + 1] = s.im
    # Hermitian mirror for the upper half: bin n-k = conj(bin k).
    re[half + 1 :] = s.re[1:half][::-1]
    im[half + 1 :] = -s.im[1:half][::-1]
    plan = _plan(n)
    _kernel.fft_inplace(re, im, plan.bitrev, plan.tw_re, plan.tw_im, True)
    return re


def to_freq_feature(x) -> np.ndarray:
    """Fixed-length real feature of an embedding's spectrum.

    Zero-pads x to n = next power of two, transforms, and concatenates the
    real parts of all n/2 + 1 bins with the imaginary parts, keeping phase.
    Output length is 2 * (n/2 + 1).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise DataError("input must be a non-empty 1-D vector")
    if not np.isfinite(x).all():
        raise DataError("input contains non-finite values")
    n = next_pow2(x.shape[0])
    padded = np.zeros(n, dtype=np.float64)
    padded[: x.shape[0]] = x
    s = rfft(padded)
    return np.concatenate([s.re, s.im])


def freq_feature_len(d: int) -> int:
    """Length of :func:`to_freq_feature` output for a d-dimensional input."""
    return 2 * (next_pow2(d) // 2 + 1)


def power_spectrum(s: ComplexSpectrum) -> np.ndarray:
    """Per-bin power re^2 + im^2."""
    s.validate()
    return s.re * s.re + s.im * s.im
