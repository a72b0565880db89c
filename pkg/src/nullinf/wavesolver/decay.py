"""Power-law fits of solutions along curves in the solved region."""

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientRange

OUTGOING_RAY = "OutgoingRay"
INTERIOR = "Interior"
TOWARD_IPLUS = "TowardIplus"


@dataclass
class FitResult:
    exponent: float
    error: float
    variable: str
    samples: int


def power_fit(s, f, variable="r", min_decades=2.0):
    """Least-squares slope of log|f| against log s; error is the max local-slope deviation."""
    s, f = np.asarray(s, float), np.abs(np.asarray(f, float))
    keep = (s > 0) & (f > 0) & np.isfinite(f)
    s, f = s[keep], f[keep]
    if s.size < 5 or np.log10(s.max() / s.min()) < min_decades - 1e-9:
        raise InsufficientRange("need at least two decades of nonzero samples")
    ls, lf = np.log(s), np.log(f)
    slope = np.polyfit(ls, lf, 1)[0]
    local = np.diff(lf) / np.diff(ls)
    return FitResult(float(slope), float(np.max(np.abs(local - slope))), variable, int(s.size))


def decay_fit(sol, curve=OUTGOING_RAY, value=-2.0, ell=None, r_range=None, T=None):
    """Fit the decay of the mode `ell` (default: lowest) along a curve.

    OutgoingRay: u_ret = value, fitted against r.
    TowardIplus: u_ret = value, fitted against x_I = sqrt((T - t*)/r) (NearI0 chart with T).
    Interior: t/r = value < 1, fitted against r (bilinear interpolation).
    The default r window is [1e2, 1e5], or [10, 1.5e5] for TowardIplus since
    x_I only covers half as many decades as r.
    """
    if r_range is None:
        r_range = (10.0, 1.5e5) if curve == TOWARD_IPLUS else (1e2, 1e5)
    ell = sol.modes[0] if ell is None else ell
    F = sol.field(ell)
    u, v = sol.grid.u, sol.grid.v
    if curve in (OUTGOING_RAY, TOWARD_IPLUS):
        i = int(np.argmin(np.abs(u - value)))
        r = 0.5 * (v - u[i])
        sel = (r >= r_range[0]) & (r <= r_range[1])
        if curve == OUTGOING_RAY:
            return power_fit(r[sel], F[i, sel], "r")
        T = u[i] + 1.0 if T is None else T
        if T <= u[i]:
            raise ValueError("need T > t* for the NearI0 chart")
        x = np.sqrt((T - u[i]) / r[sel])
        return power_fit(x, F[i, sel], "x_I")
    if curve == INTERIOR:
        if not 0 <= value < 1:
            raise ValueError("interior curves need 0 <= t/r < 1")
        r = np.geomspace(r_range[0], r_range[1], 200)
        uu, vv = r * (value - 1.0), r * (value + 1.0)
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator((u, v), F, bounds_error=False, fill_value=0.0)
        vals = interp(np.column_stack([uu, vv]))
        return power_fit(r, vals, "r")
    raise ValueError(f"unknown curve {curve!r}")
