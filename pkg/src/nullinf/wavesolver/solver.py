"""Forward solutions of spherical modes of the (model) wave operator.

The operator is

    P u = u_tt - u_rr - (k/r) u_r + ell(ell + n - 2)/r^2 u,    k = n - 1 + 2 p1,

so p1 = 0 is the Minkowski wave operator (d_t^2 - Laplacian) on the mode ell,
and p1 != 0 is the model operator with n - 1 replaced by n - 1 + 2 p1.  With
w = r^{k/2} u and characteristic coordinates u_ret = t - r, v_adv = t + r,

    4 w_uv = S - V w,   S = r^{k/2} f,   V = (k(k-2)/4 + ell(ell + n - 2)) / r^2.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import CFLViolation, QuadratureError, UnsupportedMode
from .grid import ForcingSpec, NullGrid
from .kernels import march

_GX, _GW = np.polynomial.legendre.leggauss(3)


@dataclass
class SolutionField:
    grid: NullGrid
    w: dict
    n: int = 3
    p1: float = 0.0
    variant: str = "Minkowski"
    meta: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.n - 1 + 2.0 * self.p1

    @property
    def modes(self):
        return sorted(self.w)

    def radius(self):
        u, v = self.grid.u, self.grid.v
        return 0.5 * (v[None, :] - u[:, None])

    def time(self):
        u, v = self.grid.u, self.grid.v
        return 0.5 * (v[None, :] + u[:, None])

    def field(self, ell):
        """u = r^{-k/2} w on the grid (zero on and below the axis)."""
        r = self.radius()
        out = np.zeros_like(r)
        pos = r > 0
        out[pos] = self.w[ell][pos] / r[pos] ** (0.5 * self.k)
        return out


def _potential(k, n, ell, r):
    return (0.25 * k * (k - 2.0) + ell * (ell + n - 2.0)) / (r * r)


def cell_sources(grid, forcing, k):
    """1/4 of the 3x3 Gauss integral of S over every cell [u_{i-1},u_i]x[v_{j-1},v_j]."""
    u, v = grid.u, grid.v
    du, dv = np.diff(u), np.diff(v)
    uc, vc = 0.5 * (u[1:] + u[:-1]), 0.5 * (v[1:] + v[:-1])
    src = np.zeros(grid.shape)
    acc = np.zeros((du.size, dv.size))
    for a, wa in zip(_GX, _GW):
        uq = (uc + 0.5 * du * a)[:, None]
        for b, wb in zip(_GX, _GW):
            vq = (vc + 0.5 * dv * b)[None, :]
            r = 0.5 * (vq - uq)
            t = 0.5 * (vq + uq)
            S = np.where(r > 0, np.abs(r) ** (0.5 * k) * forcing(t, np.abs(r)), 0.0)
            acc += wa * wb * S
    acc *= 0.25 * (du[:, None] * dv[None, :]) * 0.25
    src[1:, 1:] = acc
    i, j = np.indices(grid.shape)
    src[j <= i] = 0.0
    return src


def cell_potential(grid, k, n, ell):
    """q = area * V(r_center) / 16 on every cell.

    The potential term 1/4 int V w over a cell is approximated by q times the
    sum of the four corner values, which keeps the update stable next to the
    axis where V ~ 1/r^2.
    """
    u, v = grid.u, grid.v
    du, dv = np.diff(u), np.diff(v)
    uc, vc = 0.5 * (u[1:] + u[:-1]), 0.5 * (v[1:] + v[:-1])
    r = 0.5 * (vc[None, :] - uc[:, None])
    pot = np.zeros(grid.shape)
    i, j = np.indices(grid.shape)
    valid = (j > i)[1:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(valid, du[:, None] * dv[None, :] * _potential(k, n, ell, r) / 16.0, 0.0)
    pot[1:, 1:] = p
    return pot


def solve_spherical_forward(n, forcing, grid, variant="Minkowski", p1=0.0, backend=None):
    """Forward solution on a double-null grid for one or several mode forcings."""
    if n not in (2, 3):
        raise UnsupportedMode("only n = 2 and n = 3 are supported")
    if variant == "Minkowski":
        p1 = 0.0
    elif variant != "ModelP1":
        raise UnsupportedMode(f"unknown operator variant {variant!r}")
    forcings = [forcing] if isinstance(forcing, ForcingSpec) else list(forcing)
    k = n - 1 + 2.0 * p1
    if grid.u[0] > min(f.u_range[0] for f in forcings):
        raise CFLViolation("first grid row must lie before the forcing turns on")
    w = {}
    for f in forcings:
        pot = cell_potential(grid, k, n, f.ell)
        if not np.all(np.isfinite(pot)) or np.min(pot) <= -1.0:
            raise CFLViolation("cell too large for the attractive potential (q <= -1)")
        src = cell_sources(grid, f, k)
        sol = march(src, pot, backend)
        w[f.ell] = w.get(f.ell, 0.0) + sol
    return SolutionField(grid, w, n, p1, variant, {"k": k})


def discrete_residual(sol, forcing):
    """Max residual of the diamond equations, relative to the largest source cell."""
    grid = sol.grid
    forcings = [forcing] if isinstance(forcing, ForcingSpec) else list(forcing)
    worst, scale = 0.0, 0.0
    for f in forcings:
        src = cell_sources(grid, f, sol.k)
        pot = cell_potential(grid, sol.k, sol.n, f.ell)
        w = sol.w[f.ell]
        a, b, c = w[:-1, 1:], w[1:, :-1], w[:-1, :-1]
        q = pot[1:, 1:]
        res = (1 + q) * (w[1:, 1:] + c) - ((1 - q) * (a + b) + src[1:, 1:])
        i, j = np.indices(res.shape)
        res[j + 1 <= i + 1] = 0.0
        worst = max(worst, float(np.max(np.abs(res))))
        scale = max(scale, float(np.max(np.abs(src))))
    return worst / scale if scale > 0 else worst


# ------------------------------------------------------------ oracle

def _gl_panels(a, b, panels, order):
    x, wq = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x[None, :]
    wts = 0.5 * (hi - lo) * wq[None, :]
    return pts.ravel(), wts.ravel()


def dalembert_oracle(forcing, u, v, panels=40, order=10):
    """Forward solution of u_tt - Laplacian u = f Y_0 for n = 3 at points (u_ret, v_adv).

    With w = r u this is w(u, v) = 1/4 * int_{u' <= u} int_{u <= v' <= v} r' f dv' du',
    the Duhamel integral over the backward characteristic triangle after odd
    reflection through r = 0.  Composite Gauss-Legendre quadrature.
    """
    if forcing.ell != 0:
        raise QuadratureError("the closed-form oracle covers only ell = 0")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    ua, ub = forcing.u_range
    va, vb = forcing.v_range
    out = np.zeros(np.broadcast(u, v).shape)
    for idx, (uu, vv) in enumerate(zip(*np.broadcast_arrays(u, v))):
        if vv <= uu:
            continue
        u_hi = min(uu, ub)
        v_lo, v_hi = max(uu, va), min(vv, vb)
        if u_hi <= ua or v_hi <= v_lo:
            continue
        up, uw = _gl_panels(ua, u_hi, panels, order)
        vp, vw = _gl_panels(v_lo, v_hi, panels, order)
        U, Vv = np.meshgrid(up, vp, indexing="ij")
        r = 0.5 * (Vv - U)
        t = 0.5 * (Vv + U)
        S = np.where(r > 0, r * forcing(t, np.abs(r)), 0.0)
        val = 0.25 * uw @ S @ vw
        if not np.isfinite(val):
            raise QuadratureError("non-finite quadrature value")
        r0 = 0.5 * (vv - uu)
        out.flat[idx] = val / r0
    return out


def oracle_refinement(forcing, u, v, panels=(20, 40)):
    """Cauchy difference of the oracle between two panel counts."""
    a = dalembert_oracle(forcing, u, v, panels=panels[0])
    b = dalembert_oracle(forcing, u, v, panels=panels[1])
    return float(np.max(np.abs(a - b)))


# ------------------------------------------------------------ energy

def slice_energy(sol, ell, t):
    """Energy of the mode on the staircase closest to {t = const}, from the axis to u_0.

    Sum of (dw)^2/dv over v-steps and (dw)^2/du over u-steps; for V = 0 this is
    conserved exactly by the diamond scheme away from the forcing.
    """
    u, v = sol.grid.u, sol.grid.v
    w = sol.w[ell]
    i = int(np.argmin(np.abs(u - t)))
    j = i
    E = 0.0
    while i > 0:
        # step in u (down) or v (right), staying close to u + v = 2t
        if j + 1 < v.size and abs(u[i] + v[j + 1] - 2 * t) < abs(u[i - 1] + v[j] - 2 * t):
            E += (w[i, j + 1] - w[i, j]) ** 2 / (v[j + 1] - v[j])
            j += 1
        else:
            E += (w[i, j] - w[i - 1, j]) ** 2 / (u[i] - u[i - 1])
            i -= 1
    return E


def convergence_study(n, forcing, grid, levels=3, variant="Minkowski", p1=0.0, v_cap=None):
    """Max change between successive refinements on shared nodes, and the observed order."""
    sols, g = [], grid
    for _ in range(levels):
        sols.append(solve_spherical_forward(n, forcing, g, variant, p1))
        g = g.refine()
    diffs = []
    for a, b in zip(sols[:-1], sols[1:]):
        wa = a.w[forcing.ell]
        wb = b.w[forcing.ell][::2, ::2]
        keep = np.ones(wa.shape, dtype=bool)
        if v_cap is not None:
            keep &= a.grid.v[None, :] <= v_cap
        diffs.append(float(np.max(np.abs(wa - wb)[keep])))
    slopes = [float(np.log2(d0 / d1)) for d0, d1 in zip(diffs[:-1], diffs[1:])]
    return {"diffs": diffs, "slopes": slopes}
