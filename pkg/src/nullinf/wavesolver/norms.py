"""Weighted edge-b / b norms of spherical-mode solutions on null grids.

For a mode ell the angular fields enter only through sum_a |Omega_a Y|^2,
which integrates to L = ell(ell + n - 2) over the sphere (rotation
generators; they commute with the radial fields).  An angular factor in a word
therefore acts on the radial profile as multiplication by sqrt(L), times x_I
for the edge-b fields x_I Omega_a.  Norms are per unit-normalized harmonic.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from ..errors import GridTooCoarse
from .solver import SolutionField

EXTERIOR = "Exterior"
NEAR_IPLUS = "NearIplus"
FORWARD_CONE = "ForwardCone"
EDGE_B = "EdgeB"
B = "B"

CAUCHY_RATIO = 1.05


@dataclass(frozen=True)
class NormSpec:
    s: int = 0
    alpha0: float = 0.0
    alphaI: float = -0.75
    alphaPlus: float = 0.0
    family: str = EDGE_B
    k: int = 0

    def __post_init__(self):
        if self.s < 0 or self.k < 0 or int(self.s) != self.s or int(self.k) != self.k:
            raise ValueError("orders must be nonnegative integers")
        if self.family not in (EDGE_B, B):
            raise ValueError(f"unknown vector field family {self.family!r}")
        if self.s + self.k > 2:
            raise GridTooCoarse("at most two derivatives are supported by the second-order grid")


@dataclass
class NormResult:
    value: float
    divergent: bool
    partials: np.ndarray
    ratios: np.ndarray

    @property
    def finite(self):
        return not self.divergent


def _region_geometry(sol, region):
    """Row mask, lower v bound per row, and the weight functions (rho, x) on the grid."""
    u, v = sol.grid.u, sol.grid.v
    r = sol.radius()
    U = u[:, None] * np.ones_like(v)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        if region == EXTERIOR:
            rows = u <= -1.0 + 1e-9
            v_lo = -u
            rho = -1.0 / U
            x = np.sqrt(-U / r)
            scale = -u
        elif region == NEAR_IPLUS:
            rows = u >= 1.0 - 1e-9
            v_lo = 3.0 * u
            rho = 1.0 / U
            x = np.sqrt(U / r)
            scale = u
        elif region == FORWARD_CONE:
            rows = np.ones(u.shape, dtype=bool)
            a = 1.0 + np.abs(u)
            v_lo = u + 2.0 * a
            rho = 1.0 / (1.0 + np.abs(U))
            x = np.sqrt((1.0 + np.abs(U)) / r)
            scale = a
        else:
            raise ValueError(f"unknown region {region!r}")
    return rows, v_lo, rho, x, scale


def _d(F, coord, axis):
    return np.gradient(F, coord, axis=axis, edge_order=2)


def _apply(word, F, sol, x, L):
    u, v = sol.grid.u, sol.grid.v
    r = sol.radius()
    for op in reversed(word):
        if op == "V0":
            F = u[:, None] * _d(F, u, 0) + v[None, :] * _d(F, v, 1)
        elif op == "V1":
            F = 2.0 * r * _d(F, v, 1)
        elif op == "Ae":
            F = np.sqrt(L) * x * F
        elif op == "Ab":
            F = np.sqrt(L) * F
        else:
            raise ValueError(op)
    return F


def words(spec, L):
    """All words (edge-b fields of length <= s) after (b fields of length <= k)."""
    edge = ["V0", "V1"] + (["Ae"] if L > 0 else [])
    bfs = ["V0", "V1"] + (["Ab"] if L > 0 else [])
    if spec.family == B:
        edge = bfs
    out = []
    for ls in range(spec.s + 1):
        for lk in range(spec.k + 1):
            for we in product(edge, repeat=ls):
                for wb in product(bfs, repeat=lk):
                    out.append(tuple(we) + tuple(wb))
    return out


def integrand(sol, spec, region=EXTERIOR):
    rows, v_lo, rho, x, scale = _region_geometry(sol, region)
    r = sol.radius()
    a0 = spec.alphaPlus if region == NEAR_IPLUS else spec.alpha0
    total = np.zeros(r.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        wt = rho ** (-2.0 * a0) * x ** (-4.0 * spec.alphaI) * r ** (sol.n - 1) * 0.5
        for ell in sol.modes:
            F = sol.field(ell)
            L = ell * (ell + sol.n - 2)
            for wd in words(spec, L):
                G = _apply(wd, F, sol, x, L)
                total += G * G
        out = wt * total
    good = rows[:, None] & (sol.grid.v[None, :] >= v_lo[:, None] - 1e-12) & (r > 0)
    out = np.where(good & np.isfinite(out), out, 0.0)
    return out, rows, v_lo, scale


def _row_integrals(vals, v, lo, hi):
    C = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(v))])
    return np.interp(hi, v, C) - np.interp(lo, v, C)


def weighted_norm(sol, spec, region=EXTERIOR, levels=None):
    """Squared-norm quadrature on exhaustions {x_I >= 2^-j}; returns the norm and a divergence flag.

    Partial integrals I_j are computed for j = 1..J; the norm is declared
    divergent when the last three increment ratios all exceed 1/1.05.
    """
    dens, rows, v_lo, scale = integrand(sol, spec, region)
    u, v = sol.grid.u, sol.grid.v
    idx = np.flatnonzero(rows)
    if idx.size < 3:
        raise GridTooCoarse("fewer than three grid rows in the region")
    J = int(np.floor(np.log((v[-1] - u[idx]).min() / (2.0 * scale[idx].max())) / np.log(4.0)))
    if levels is not None:
        J = min(J, levels)
    if J < 5:
        raise GridTooCoarse("grid does not reach far enough towards null infinity")
    partials = []
    for j in range(1, J + 1):
        per_row = np.array([_row_integrals(dens[i], v, v_lo[i], u[i] + 2.0 * scale[i] * 4.0 ** j)
                            for i in idx])
        partials.append(np.trapezoid(per_row, u[idx]) if idx.size > 1 else per_row[0])
    partials = np.array(partials)
    inc = np.diff(np.concatenate([[0.0], partials]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = inc[1:] / inc[:-1]
    tail = ratios[-3:]
    divergent = bool(np.all(np.isfinite(tail)) and np.all(tail > 1.0 / CAUCHY_RATIO))
    return NormResult(float(np.sqrt(partials[-1])), divergent, partials, ratios)


def with_weight(sol, a, b, region=EXTERIOR):
    """The solution multiplied by rho^a x_I^{2b} (radial profiles only)."""
    _, _, rho, x, _ = _region_geometry(sol, region)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = rho ** a * x ** (2.0 * b)
    f = np.where(np.isfinite(f), f, 0.0)
    return SolutionField(sol.grid, {ell: w * f for ell, w in sol.w.items()}, sol.n, sol.p1,
                         sol.variant, dict(sol.meta))


def sharpness_scan(sol, alphaI_grid, alpha0=-1.0, s=0):
    """Finite / divergent classification of the s-norm over a grid of alphaI values."""
    rows = []
    for aI in alphaI_grid:
        res = weighted_norm(sol, NormSpec(s, alpha0, float(aI)))
        rows.append({"alphaI": float(aI), "finite": res.finite, "value": res.value,
                     "last_ratio": float(res.ratios[-1])})
    finite = [r["alphaI"] for r in rows if r["finite"]]
    div = [r["alphaI"] for r in rows if not r["finite"]]
    lo = max(finite) if finite else None
    hi = min([a for a in div if lo is None or a > lo], default=None)
    return {"rows": rows, "bracket": (lo, hi)}
