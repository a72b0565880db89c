"""Compactified coordinates near null infinity and edge-b metric data.

Conventions used throughout the package:

* t* = t - r.  Chart NearI0(T) has rho = 1/(T - t*), x = sqrt((T - t*)/r);
  chart NearIplus(T) has rho = 1/(t* - T), x = sqrt((t* - T)/r).
* Frame vectors are ordered (rho d_rho, x d_x, x d_{y^1}, ..., x d_{y^{n-1}}).
* Covectors are written zeta drho/rho + xi dx/x + eta_j dy^j/x and stored in
  the order (zeta, xi, eta_1, ..., eta_{n-1}).
* Sphere points are stored as scaled stereographic coordinates
  y = 2 w'/(1 - s w_n) where s = +-1 picks the projection pole.  The pole is
  chosen on the opposite hemisphere so |y| <= 2.  The inverse round metric is
  k^{ij} = (1 + |y|^2/4)^2 delta^{ij}.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError
from .expr import Expr

NEAR_I0 = "NearI0"
NEAR_IPLUS = "NearIplus"


@dataclass(frozen=True)
class ChartId:
    kind: str
    T: float = 0.0

    def __post_init__(self):
        if self.kind not in (NEAR_I0, NEAR_IPLUS):
            raise ValueError(f"unknown chart {self.kind!r}")

    @property
    def sign(self):
        """+1 for NearI0, -1 for NearIplus (t* = T - sign/rho)."""
        return 1.0 if self.kind == NEAR_I0 else -1.0


def near_i0(T=0.0):
    return ChartId(NEAR_I0, float(T))


def near_iplus(T=0.0):
    return ChartId(NEAR_IPLUS, float(T))


# ---------------------------------------------------------------- sphere atlas

def sphere_to_stereo(omega):
    """Unit vector in R^n -> (y, pole)."""
    w = np.asarray(omega, dtype=float)
    w = w / np.linalg.norm(w)
    pole = 1.0 if w[-1] <= 0 else -1.0
    y = 2.0 * w[:-1] / (1.0 - pole * w[-1])
    return y, pole


def stereo_to_sphere(y, pole):
    y = np.asarray(y, dtype=float)
    q = 0.25 * float(y @ y)
    wn = pole * (q - 1.0) / (q + 1.0)
    return np.concatenate([y / (1.0 + q), [wn]])


def sphere_kinv(y):
    """Conformal factor of the inverse round metric in stereographic coordinates."""
    y = np.asarray(y, dtype=float)
    return (1.0 + 0.25 * float(y @ y)) ** 2


@dataclass
class SpacetimePoint:
    t: float
    r: float
    omega: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if not self.r > 0:
            raise DomainError("r must be positive")

    @property
    def tstar(self):
        return self.t - self.r


@dataclass
class ChartPoint:
    chart: ChartId
    rho: float
    x: float
    y: np.ndarray = None
    pole: float = -1.0

    def __post_init__(self):
        if self.y is None:
            self.y = np.zeros(2)
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if self.rho < 0 or self.x < 0:
            raise DomainError("chart coordinates must be nonnegative")

    @property
    def n(self):
        return self.y.size + 1

    @property
    def omega(self):
        return stereo_to_sphere(self.y, self.pole)


# ------------------------------------------------------------ chart maps

def to_chart(p, chart):
    d = chart.sign * (chart.T - p.tstar)
    if not d > 0:
        raise DomainError(f"t* = {p.tstar} on the wrong side of T = {chart.T} for {chart.kind}")
    rho = 1.0 / d
    x = np.sqrt(d / p.r)
    if rho >= 1 or x >= 1:
        raise DomainError(f"point outside {chart.kind}: rho = {rho}, x_I = {x}")
    y, pole = sphere_to_stereo(p.omega)
    return ChartPoint(chart, rho, x, y, pole)


def from_chart(c):
    if c.rho <= 0 or c.x <= 0:
        raise DomainError("boundary points have no spacetime preimage")
    tstar = c.chart.T - c.chart.sign / c.rho
    r = 1.0 / (c.rho * c.x * c.x)
    return SpacetimePoint(tstar + r, r, c.omega)


def transition(c, chart):
    """Move an interior chart point to another chart through spacetime."""
    return to_chart(from_chart(c), chart)


def varrho_ratio(c):
    """(1/(t+r)) / (rho x^2); bounded above and below on each chart."""
    T, s, rho, x = c.chart.T, c.chart.sign, c.rho, c.x
    # t + r = T - s/rho + 2/(rho x^2)
    return 1.0 / (T * rho * x * x - s * x * x + 2.0)


def eb_frame_in_spacetime(c):
    """Frame vectors in (d_t*, d_r, d_y) components.

    Returns (F, cond) where row a of F is the a-th frame vector.
    """
    if c.rho <= 0 or c.x <= 0:
        raise DomainError("frame is degenerate on the boundary")
    n = c.n
    r = 1.0 / (c.rho * c.x * c.x)
    F = np.zeros((n + 1, n + 1))
    F[0, 0] = c.chart.sign / c.rho
    F[0, 1] = -r
    F[1, 1] = -2.0 * r
    for j in range(n - 1):
        F[2 + j, 2 + j] = c.x
    return F, float(np.linalg.cond(F))


def spacetime_in_frame(c):
    """Rows: d_t*, d_r, d_y^j written in the frame (inverse of the frame map)."""
    F, _ = eb_frame_in_spacetime(c)
    return np.linalg.inv(F)


def spacetime_in_coordinates(c):
    """Rows: d_t*, d_r written on the coordinate fields (d_rho, d_x)."""
    A = spacetime_in_frame(c)[:2, :2]
    return A * np.array([c.rho, c.x])


# --------------------------------------------------------------- metrics

@dataclass
class MetricSpec:
    """Background metric selector.

    `perturbation` maps (i, j) index pairs in the coframe order
    (drho/rho, dx/x, dy/x) to expressions in (rho, x); the entries are added to
    the rescaled Minkowski metric (lower indices).
    """

    kind: str = "Minkowski"
    n: int = 3
    m: float = 0.0
    p1: float = 0.0
    perturbation: dict = field(default_factory=dict)
    orders: tuple = (1.0, 0.5, 1.0)

    def __post_init__(self):
        if self.kind not in ("Minkowski", "Schwarzschild", "ModelP1", "Perturbation"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        l0, lI, lp = self.orders
        if not (0 < l0 <= 1 and 0 < lp <= 1 and 0 < lI <= 0.5):
            raise ValueError("decay orders need l0, l+ in (0,1] and lI in (0,1/2]")
        pert = {}
        for key, val in self.perturbation.items():
            i, j = sorted(key)
            pert[(i, j)] = val if isinstance(val, Expr) else Expr(val)
        self.perturbation = pert


def minkowski():
    return MetricSpec("Minkowski")


def _mink_block(sign, x):
    """2x2 block of the rescaled dual metric on (zeta, xi)."""
    return np.array([[0.0, 0.5 * sign], [0.5 * sign, -0.5 * sign + 0.25 * x * x]])


def model_block(sign):
    """The same block frozen at x = 0."""
    return _mink_block(sign, 0.0)


def dual_metric_raw(m, sign, rho, x, y):
    """Rescaled dual metric at raw coordinates (no domain checks)."""
    n = m.n
    G = np.zeros((n + 1, n + 1))
    G[:2, :2] = _mink_block(sign, x)
    kk = sphere_kinv(y)
    for j in range(n - 1):
        G[2 + j, 2 + j] = kk
    if m.kind == "Schwarzschild":
        G[:2, :2] /= 1.0 - 2.0 * m.m * rho * x * x
    elif m.kind == "Perturbation" and m.perturbation:
        g = np.linalg.inv(G)
        for (i, j), e in m.perturbation.items():
            v = float(e(rho, x))
            g[i, j] += v
            if i != j:
                g[j, i] += v
        G = np.linalg.inv(g)
    return G


def dual_metric_eb(m, c):
    """Rescaled dual metric rho^-2 x^-2 g^{-1} in the covector order (zeta, xi, eta)."""
    if c.n != m.n:
        raise ValueError("chart point and metric disagree on n")
    return dual_metric_raw(m, c.chart.sign, c.rho, c.x, c.y)


def metric_eb(m, c):
    return np.linalg.inv(dual_metric_eb(m, c))


def quadratic_form(G, zeta, xi, eta):
    v = np.concatenate([[zeta, xi], np.atleast_1d(eta)])
    return float(v @ G @ v)


def signature(G):
    ev = np.linalg.eigvalsh(G)
    return int(np.sum(ev < 0)), int(np.sum(ev > 0))


# ------------------------------------------------------- admissibility fits

def _fit_path(values, s):
    """Log-log slope of |values| against s, with local-slope spread."""
    a = np.abs(values)
    if np.all(a == 0):
        return "exact", 0.0
    if np.any(a == 0):
        raise FitError("remainder vanishes at isolated samples")
    ls, la = np.log(s), np.log(a)
    slope, icpt = np.polyfit(ls, la, 1)
    local = np.diff(la) / np.diff(ls)
    return float(slope), float(np.max(np.abs(local - slope)))


def fit_admissibility_orders(m, chart, decades=(-4.0, -1.0), per_decade=8,
                             fixed=0.5, tol=0.1, y=None):
    """Fit decay exponents of rescaled metric minus Minkowski along two paths.

    Path "x": x -> 0 at rho = fixed.  Path "rho": rho -> 0 at x = fixed.
    Returns {path: {(i, j): exponent or "exact"}} plus the worst residual.
    """
    if per_decade < 4:
        raise FitError("need at least 4 samples per decade")
    lo, hi = decades
    s = np.logspace(lo, hi, int(round((hi - lo) * per_decade)) + 1)
    y = np.zeros(m.n - 1) if y is None else np.asarray(y, dtype=float)
    ref = MetricSpec("Minkowski", n=m.n)
    report = {"paths": {}, "max_residual": 0.0}
    for path in ("x", "rho"):
        rem = []
        for sv in s:
            rho, x = (fixed, sv) if path == "x" else (sv, fixed)
            c = ChartPoint(chart, rho, x, y)
            rem.append(metric_eb(m, c) - metric_eb(ref, c))
        rem = np.array(rem)
        # clean round-off when the remainder is identically zero
        scale = np.max(np.abs([metric_eb(ref, ChartPoint(chart, fixed, fixed, y))]))
        rem[np.abs(rem) < 1e-14 * scale] = 0.0
        out = {}
        for i in range(m.n + 1):
            for j in range(i, m.n + 1):
                e, res = _fit_path(rem[:, i, j], s)
                if res > tol:
                    raise FitError(f"component ({i},{j}) along {path}: local slope spread {res:.3g} > {tol}")
                report["max_residual"] = max(report["max_residual"], res)
                out[(i, j)] = e
        report["paths"][path] = out
    return report
