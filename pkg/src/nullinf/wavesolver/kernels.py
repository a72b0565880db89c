"""Diamond-cell marching on a double-null grid.

Both backends solve the same recurrence

    (1 + q) w[i, j] = (1 - q) (w[i-1, j] + w[i, j-1]) - (1 + q) w[i-1, j-1] + src[i, j]

with q = pot[i, j], for j > i, with w[i, i] = 0 (regularity at the axis) and w[0, :] = 0.
Set NULLINF_BACKEND=numpy to force the vectorized fallback.
"""

import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def march_numpy(src, pot):
    """Sweep anti-diagonals i + j = d; every node on one depends only on earlier ones."""
    nu, nv = src.shape
    w = np.zeros((nu, nv))
    for d in range(3, nu + nv - 1):
        i_lo = max(1, d - nv + 1)
        i_hi = min(nu - 1, (d - 1) // 2)
        if i_hi < i_lo:
            continue
        i = np.arange(i_lo, i_hi + 1)
        j = d - i
        a = w[i - 1, j]
        b = w[i, j - 1]
        q = pot[i, j]
        w[i, j] = ((1.0 - q) * (a + b) + src[i, j]) / (1.0 + q) - w[i - 1, j - 1]
    return w


if HAVE_NUMBA:
    @njit(cache=True)
    def march_numba(src, pot):
        nu, nv = src.shape
        w = np.zeros((nu, nv))
        for i in range(1, nu):
            for j in range(i + 1, nv):
                a = w[i - 1, j]
                b = w[i, j - 1]
                q = pot[i, j]
                w[i, j] = ((1.0 - q) * (a + b) + src[i, j]) / (1.0 + q) - w[i - 1, j - 1]
        return w
else:  # pragma: no cover
    march_numba = None


def backend():
    name = os.environ.get("NULLINF_BACKEND", "numba" if HAVE_NUMBA else "numpy").lower()
    if name == "numba" and not HAVE_NUMBA:
        name = "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    return name


def march(src, pot, which=None):
    which = which or backend()
    src = np.ascontiguousarray(src, dtype=np.float64)
    pot = np.ascontiguousarray(pot, dtype=np.float64)
    if which == "numba":
        return march_numba(src, pot)
    return march_numpy(src, pot)
