"""Pure-numpy butterfly kernel, the fallback when the compiled extension is
unavailable (or forced via FREQRAG_PURE_PYTHON=1).

Stage-by-stage the butterflies are vectorized over blocks, but every element
sees the same multiply/add sequence as the compiled loop, so both backends
return bit-identical spectra.
"""

import numpy as np

BACKEND = "python"


def fft_inplace(re, im, bitrev, tw_re, tw_im, inverse):
    """Radix-2 decimation-in-time transform of (re, im), in place.

    Same contract as the compiled kernel: tw_re/tw_im hold
    exp(-2*pi*i*k/n) for k in [0, n/2); the inverse pass conjugates them
    and scales by 1/n.
    """
    n = re.shape[0]
    re[:] = re[bitrev]
    im[:] = im[bitrev]

    m = 2
    while m <= n:
        half = m >> 1
        stride = n // m
        wr = tw_re[: half * stride : stride]
        wi = tw_im[: half * stride : stride]
        if inverse:
            wi = -wi
        rows = re.reshape(n // m, m)
        iows = im.reshape(n // m, m)
        er = rows[:, :half]
        ei = iows[:, :half]
        xr = rows[:, half:]
        xi = iows[:, half:]
        tr = wr * xr - wi * xi
        ti = wr * xi + wi * xr
        rows[:, half:] = er - tr
        iows[:, half:] = ei - ti
        er += tr
        ei += ti
        m <<= 1

    if inverse:
        re /= n
        im /= n
