# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled butterfly kernel for the iterative radix-2 transform.

Operates in place on separate real/imaginary float64 arrays using tables
prepared by the caller (bit-reversal permutation and half-length twiddle
factors).  The schedule and per-element arithmetic mirror the numpy
fallback exactly; combined with -ffp-contract=off at build time the two
backends produce bit-identical output.
"""

import numpy as np

cimport numpy as cnp

BACKEND = "compiled"


def fft_inplace(
    double[::1] re,
    double[::1] im,
    long long[::1] bitrev,
    double[::1] tw_re,
    double[::1] tw_im,
    bint inverse,
):
    """Radix-2 decimation-in-time transform of (re, im), in place.

    tw_re/tw_im hold exp(-2*pi*i*k/n) for k in [0, n/2); the inverse pass
    conjugates them and scales the result by 1/n.
    """
    cdef Py_ssize_t n = re.shape[0]
    cdef Py_ssize_t i, j, m, half, stride, base, k, idx
    cdef double wr, wi, tr, ti, er, ei, xr, xi, tmp
    cdef double sign = -1.0 if inverse else 1.0

    for i in range(n):
        j = <Py_ssize_t> bitrev[i]
        if j > i:
            tmp = re[i]; re[i] = re[j]; re[j] = tmp
            tmp = im[i]; im[i] = im[j]; im[j] = tmp

    m = 2
    while m <= n:
        half = m >> 1
        stride = n // m
        for base in range(0, n, m):
            idx = 0
            for k in range(base, base + half):
                wr = tw_re[idx]
                wi = sign * tw_im[idx]
                xr = re[k + half]; xi = im[k + half]
                tr = wr * xr - wi * xi
                ti = wr * xi + wi * xr
                er = re[k]; ei = im[k]
                re[k] = er + tr
                im[k] = ei + ti
                re[k + half] = er - tr
                im[k + half] = ei - ti
                idx += stride
        m <<= 1

    if inverse:
        for i in range(n):
            re[i] = re[i] / n
            im[i] = im[i] / n
