"""Multiplier vector fields, deformation tensors and threshold predicates.

Weights: check_alpha0 = alpha0 + 1, check_alphaI = alphaI + 1/2 and
check_alphaPlus = alphaPlus + 1 (so that 2 check_alphaI = 2 alphaI + 1).

Near I0 the multiplier is V = rho^{-2 a0} x^{-4 aI} W with
W = -x d_x + (2 - c) rho d_rho; near I+ it is V = rho^{-2 a+} x^{-4 aI} W with
W = x d_x - (2 + c) rho d_rho.  Tensors are symmetric matrices in the frame
(rho d_rho, x d_x, x d_y) with the weight rho^{-2 alpha} x^{-4 alphaI} removed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import StepError, UnknownTheoremTag
from .geometry import NEAR_I0, ChartId, ChartPoint, metric_eb, model_block

FUTURE_TIMELIKE = "FutureTimelike"
PAST_TIMELIKE = "PastTimelike"
NULL = "Null"
SPACELIKE = "Spacelike"


@dataclass
class MultiplierField:
    check_alpha0: float
    check_alphaI: float
    check_alphaPlus: float = 0.0
    c: float = 0.1
    chart: ChartId = field(default_factory=lambda: ChartId(NEAR_I0))

    def __post_init__(self):
        if not 0 < self.c < 2:
            raise ValueError("c must lie in (0, 2)")

    @classmethod
    def from_weights(cls, alpha0, alphaI, alphaPlus=0.0, c=0.1, chart=None):
        return cls(alpha0 + 1.0, alphaI + 0.5, alphaPlus + 1.0, c, chart or ChartId(NEAR_I0))

    @property
    def near_i0(self):
        return self.chart.kind == NEAR_I0

    @property
    def rho_weight(self):
        return self.check_alpha0 if self.near_i0 else self.check_alphaPlus

    def W(self, n=3):
        w = np.zeros(n + 1)
        if self.near_i0:
            w[0], w[1] = 2.0 - self.c, -1.0
        else:
            w[0], w[1] = -(2.0 + self.c), 1.0
        return w


def w_vector(c, chart_kind=NEAR_I0, n=3):
    w = np.zeros(n + 1)
    if chart_kind == NEAR_I0:
        w[0], w[1] = 2.0 - c, -1.0
    else:
        w[0], w[1] = -(2.0 + c), 1.0
    return w


# ------------------------------------------------------ causal character

def _reference_future(chart_kind, n):
    return w_vector(1.0, chart_kind, n)


def causal_character(m, v, c, tol=1e-12, detail=False):
    """Causal type of a frame vector for the rescaled metric.

    Time orientation: g(v, W_ref) < 0 for the future timelike reference W at
    c = 1.  With detail=True a (type, future_directed) pair is returned; null
    vectors then carry their orientation too.
    """
    v = np.asarray(v, dtype=float)
    g = metric_eb(m, c)
    q = float(v @ g @ v)
    ref = _reference_future(c.chart.kind, c.n)
    pair = float(v @ g @ ref)
    scale = max(1.0, float(v @ v))
    if q < -tol * scale:
        kind = FUTURE_TIMELIKE if pair < 0 else PAST_TIMELIKE
    elif q > tol * scale:
        kind = SPACELIKE
    else:
        kind = NULL
    if detail:
        future = None if kind == SPACELIKE or np.allclose(v, 0) else pair < 0
        return kind, future
    return kind


def g_ww(c_param, chart_kind=NEAR_I0):
    """Exact value of g(W, W) for the model at null infinity."""
    if chart_kind == NEAR_I0:
        return -2.0 * c_param * (2.0 - c_param)
    return -2.0 * c_param * (2.0 + c_param)


# ------------------------------------------------- deformation tensors

def model_dual(chart_kind, n):
    G = np.eye(n + 1)
    G[:2, :2] = model_block(1.0 if chart_kind == NEAR_I0 else -1.0)
    return G


def pi_symbolic(mult, n=3):
    """Weight-stripped -L_V g^{-1} for the model near I0."""
    a0, aI, c = mult.check_alpha0, mult.check_alphaI, mult.c
    P = np.zeros((n + 1, n + 1))
    P[0, 0] = -4.0 * (2.0 - c) * aI
    P[0, 1] = P[1, 0] = (c - 2.0) * a0 + (6.0 - 2.0 * c) * aI + c - 1.0
    P[1, 1] = 2.0 * a0 - 4.0 * aI + 1.0 - c
    for j in range(2, n + 1):
        P[j, j] = 2.0 * c
    return P


def k_from_pi(P, chart_kind, n):
    """K = pi - (1/2) g^{-1} tr_g pi, written with the rescaled model metric."""
    G = model_dual(chart_kind, n)
    return P - 0.5 * G * np.trace(np.linalg.solve(G, P))


def p1_term(mult, lam, n=3):
    """2 sigma(P1) (x) sigma(V) with the weight removed."""
    u = np.zeros(n + 1)
    u[0], u[1] = -2.0, 1.0
    s = 1.0 if mult.near_i0 else -1.0
    W = mult.W(n)
    return -s * lam * (np.outer(u, W) + np.outer(W, u))


def k_tilde_symbolic(mult, lam, n=3):
    """Closed-form weight-stripped K-tilde at null infinity for scalar p1 = lam."""
    c, aI = mult.c, mult.check_alphaI
    K = np.zeros((n + 1, n + 1))
    if mult.near_i0:
        a0 = mult.check_alpha0
        K[0, 0] = (2.0 - c) * (-4.0 * aI + 4.0 * lam)
        K[0, 1] = 4.0 * aI - 4.0 * lam + 0.5 * c * (-n + 1.0 - 4.0 * aI + 2.0 * lam)
        K[1, 1] = -2.0 * aI + 2.0 * lam + 0.5 * c * (n - 1.0 + 2.0 * a0)
        ang = 2.0 - 4.0 * aI + 4.0 * a0 + c * (-n + 1.0 - 2.0 * a0)
    else:
        ap = mult.check_alphaPlus
        K[0, 0] = (2.0 + c) * (-4.0 * aI + 4.0 * lam)
        K[0, 1] = 4.0 * aI - 4.0 * lam + 0.5 * c * (n - 1.0 + 4.0 * aI - 2.0 * lam)
        K[1, 1] = -2.0 * aI + 2.0 * lam + 0.5 * c * (-n + 1.0 - 2.0 * ap)
        ang = -2.0 + 4.0 * aI - 4.0 * ap + c * (-n + 1.0 - 2.0 * ap)
    K[1, 0] = K[0, 1]
    for j in range(2, n + 1):
        K[j, j] = ang
    return K


def _coord_tensor(G, rho, x, n):
    """Frame tensor -> coordinate components in (rho, x, y)."""
    F = np.diag([rho, x] + [x] * (n - 1))
    return F @ G @ F.T


def _lie_fd(m, mult, rho, x, y, h=1e-4):
    """Numerical -L_V g^{-1} in frame components, stripped of its weight."""
    n = m.n
    sign = mult.chart.sign
    if m.kind in ("Minkowski", "ModelP1"):
        # normal operator at the fiber over y: freeze k and drop the x^2 term
        dual = lambda r, xx, yy: model_dual(mult.chart.kind, n)
    else:
        from .geometry import dual_metric_raw
        dual = lambda r, xx, yy: dual_metric_raw(m, sign, r, xx, yy)
    aR, aI = mult.rho_weight, mult.check_alphaI
    Wf = mult.W(n)

    def hinv(q):
        r, xx, yy = q[0], q[1], q[2:]
        return (r * xx) ** 2 * _coord_tensor(dual(r, xx, yy), r, xx, n)

    def vfield(q):
        r, xx = q[0], q[1]
        wgt = r ** (-2.0 * aR) * xx ** (-4.0 * aI)
        v = np.zeros(n + 1)
        v[0] = wgt * Wf[0] * r
        v[1] = wgt * Wf[1] * xx
        return v

    q0 = np.concatenate([[rho, x], np.atleast_1d(y)])
    dims = q0.size
    dH = np.empty((dims, dims, dims))
    dV = np.empty((dims, dims))
    for c_ in range(dims):
        hc = h * (1.0 + abs(q0[c_]))
        e = np.zeros(dims)
        e[c_] = hc
        dH[c_] = (-hinv(q0 + 2 * e) + 8 * hinv(q0 + e) - 8 * hinv(q0 - e) + hinv(q0 - 2 * e)) / (12 * hc)
        dV[:, c_] = (-vfield(q0 + 2 * e) + 8 * vfield(q0 + e) - 8 * vfield(q0 - e)
                     + vfield(q0 - 2 * e)) / (12 * hc)
    H = hinv(q0)
    V = vfield(q0)
    lie = np.einsum("c,cab->ab", V, dH) - dV @ H - H @ dV.T
    if not np.all(np.isfinite(lie)):
        raise StepError("finite differences produced non-finite values")
    F = np.diag([rho, x] + [x] * (n - 1))
    Finv = np.linalg.inv(F)
    pi = -Finv @ lie @ Finv.T
    weight = rho ** (-2.0 * (aR - 1.0)) * x ** (-4.0 * aI + 2.0)
    return pi / weight


def deformation_tensor(m, mult, p, p1=0.0, method="symbolic", include_p1=True):
    """Weight-stripped K-tilde (or K_V with include_p1=False) at a chart point.

    method="symbolic" uses the closed form valid for the model; method="fd"
    differentiates the rescaled inverse metric along V numerically.
    """
    n = m.n
    if method == "symbolic":
        if mult.near_i0:
            K = k_from_pi(pi_symbolic(mult, n), mult.chart.kind, n)
            if include_p1:
                K = K + p1_term(mult, p1, n)
            return K
        K = k_tilde_symbolic(mult, p1, n)
        return K if include_p1 else K - p1_term(mult, p1, n)
    P = _lie_fd(m, mult, p.rho, p.x, p.y)
    K = k_from_pi(P, mult.chart.kind, n)
    if include_p1:
        K = K + p1_term(mult, p1, n)
    return K


def pi_tensor(m, mult, p, method="fd"):
    if method == "symbolic":
        return pi_symbolic(mult, m.n)
    return _lie_fd(m, mult, p.rho, p.x, p.y)


def minor_trace_det(K):
    M = np.asarray(K)[:2, :2]
    return float(np.trace(M)), float(np.linalg.det(M))


def richardson_minor(alpha_check0, alpha_checkI, lam, c=0.01, n=3, chart=None, alpha_checkPlus=0.0):
    """c -> 0 limit of the trace and slope of the determinant from c and c/2."""
    chart = chart or ChartId(NEAR_I0)
    out = []
    for cc in (c, 0.5 * c):
        mult = MultiplierField(alpha_check0, alpha_checkI, alpha_checkPlus, cc, chart)
        K = k_tilde_symbolic(mult, lam, n)
        out.append(minor_trace_det(K))
    (t1, d1), (t2, d2) = out
    trace0 = 2.0 * t2 - t1
    slope = 2.0 * (d2 / (0.5 * c)) - d1 / c
    return {"trace0": trace0, "det_slope": slope, "trace": (t1, t2), "det": (d1, d2)}


def c_grid(lo=1e-8, hi=1.9, num=240):
    return np.geomspace(lo, hi, num)


def positivity_scan(alpha0, alphaI, alphaPlus=0.0, p1=0.0, cs=None, n=3, side=NEAR_I0,
                    negative=False):
    """Smallest eigenvalue of the stripped K-tilde at null infinity over a c grid.

    With negative=True the largest eigenvalue is tracked instead and the scan
    looks for negative definiteness.
    """
    cs = c_grid() if cs is None else np.asarray(cs)
    chart = ChartId(side)
    vals = []
    for c in cs:
        mult = MultiplierField.from_weights(alpha0, alphaI, alphaPlus, c, chart)
        ev = np.linalg.eigvalsh(k_tilde_symbolic(mult, p1, n))
        vals.append(-ev[-1] if negative else ev[0])
    vals = np.array(vals)
    i = int(np.argmax(vals))
    return {"definite": bool(vals[i] > 0), "best_c": float(cs[i]), "best_min_eig": float(vals[i]),
            "c": cs, "min_eig": vals}


def analytic_threshold(alpha0, p1):
    """Largest alphaI for which the forward multiplier works near I0."""
    return min(-0.5 + p1, alpha0 + 0.5)


def positivity_boundary(alpha0, p1=0.0, lo=-3.0, hi=2.0, tol=1e-5, n=3):
    """Bisection in alphaI for the edge of the positivity region."""
    ok = lambda a: positivity_scan(alpha0, a, p1=p1, n=n)["definite"]
    if not ok(lo) or ok(hi):
        raise ValueError("bracket does not straddle the positivity boundary")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------- thresholds

@dataclass
class ThresholdReport:
    tag: str
    records: list

    @property
    def all_pass(self):
        return all(r["pass"] for r in self.records)

    def failures(self):
        return [r["name"] for r in self.records if not r["pass"]]

    def passes(self):
        return [r["pass"] for r in self.records]


def _lt(name, lhs, rhs):
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs), "pass": bool(lhs < rhs)}


def _nat(s):
    ok = s is not None and float(s) >= 0 and float(s) == int(float(s))
    return {"name": "s ∈ ℕ", "lhs": float(s if s is not None else np.nan), "rhs": 0.0, "pass": bool(ok)}


def dual_weights(s, alpha0, alphaI, alphaPlus):
    """Order/weight duality: s -> 1 - s, (alpha0, 2 alphaI, alpha+) -> -(...) - (2, 2, 2)."""
    return 1.0 - s, -alpha0 - 2.0, -alphaI - 1.0, -alphaPlus - 2.0


THEOREM_TAGS = ("ThmExterior", "ThmGlobal", "ThmFw", "ThmBw", "ThmE", "ThmEBw", "LemRc", "LemRcBw",
                "LemRinMinus", "LemRinMinusBw", "LemRinPlus", "LemRinPlusBw", "LemRout", "LemRoutBw",
                "PropNe", "PropNeBw", "ThmNpB", "ThmNpBAdj")


def threshold_evaluate(tag, s=0.0, s0=None, alpha0=0.0, alphaI=0.0, alphaPlus=0.0, p1bar=0.0,
                       p1bar_plus=0.0, lam=0j, gammaI=0.0, n=3):
    """Evaluate every inequality of a tagged statement literally.

    Backward tags take the tilde (adjoint) orders and weights as their inputs.
    When s0 is omitted for a forward propagation statement, it is taken
    halfway between its lower bound and s (or at the bound when s is too small).
    """
    a0, aI, ap, p = alpha0, alphaI, alphaPlus, p1bar
    thr = 0.5 - a0 + 2 * aI - p
    thr_bw = 0.5 - a0 + 2 * aI + p
    if s0 is None:
        s0 = 0.5 * (s + thr) if s > thr else thr
    R = []
    if tag == "ThmExterior":
        R = [_lt("αI < −1/2", aI, -0.5), _lt("αI < α0 + 1/2", aI, a0 + 0.5), _nat(s)]
    elif tag == "ThmGlobal":
        R = [_lt("α+ + 1/2 < αI", ap + 0.5, aI), _lt("αI < −1/2", aI, -0.5),
             _lt("αI < α0 + 1/2", aI, a0 + 0.5), _nat(s)]
    elif tag == "ThmFw":
        R = [_lt("α+ < αI − 1/2", ap, aI - 0.5), _lt("αI − 1/2 < α0", aI - 0.5, a0),
             _lt("s > s0", s0, s), _lt("s0 > 1/2 − α0 + 2αI − p1", thr, s0),
             _lt("αI < −1/2 + p1", aI, -0.5 + p)]
    elif tag == "ThmBw":
        R = [_lt("α̃I > −1/2 − p1", -0.5 - p, aI), _lt("α̃0 < α̃I − 1/2", a0, aI - 0.5),
             _lt("α̃I − 1/2 < α̃+", aI - 0.5, ap), _lt("s̃ < 1/2 − α̃0 + 2α̃I + p1", s, thr_bw)]
    elif tag == "ThmE":
        R = [_lt("s > 1/2 − α0 + 2αI − p1", thr, s), _lt("αI < α0 + 1/2", aI, a0 + 0.5),
             _lt("αI < −1/2 + p1", aI, -0.5 + p)]
    elif tag == "ThmEBw":
        R = [_lt("s̃ < 1/2 − α̃0 + 2α̃I + p1", s, thr_bw), _lt("α̃0 < α̃I − 1/2", a0, aI - 0.5),
             _lt("α̃I > −1/2 − p1", -0.5 - p, aI)]
    elif tag == "LemRc":
        R = [_lt("s > s0", s0, s), _lt("s0 > 1/2 − α0 + 2αI − p1", thr, s0)]
    elif tag == "LemRcBw":
        R = [_lt("s̃ < 1/2 − α̃0 + 2α̃I + p1", s, thr_bw)]
    elif tag == "LemRinMinus":
        R = [_lt("αI < α0 + 1/2", aI, a0 + 0.5)]
    elif tag == "LemRinMinusBw":
        R = [_lt("α̃0 < α̃I − 1/2", a0, aI - 0.5)]
    elif tag == "LemRinPlus":
        R = [_lt("α+ < αI − 1/2", ap, aI - 0.5)]
    elif tag == "LemRinPlusBw":
        R = [_lt("α̃I < α̃+ + 1/2", aI, ap + 0.5)]
    elif tag == "LemRout":
        R = [_lt("αI < −1/2 + p1", aI, -0.5 + p)]
    elif tag == "LemRoutBw":
        R = [_lt("α̃I > −1/2 − p1", -0.5 - p, aI)]
    elif tag == "PropNe":
        R = [_lt("α+ + 1/2 < αI", ap + 0.5, aI), _lt("αI < −1/2 + p1", aI, -0.5 + p)]
    elif tag == "PropNeBw":
        R = [_lt("−1/2 − p1 < α̃I", -0.5 - p, aI), _lt("α̃I < α̃+ + 1/2", aI, ap + 0.5)]
    elif tag == "ThmNpB":
        q = 0.5 * (n - 1) + p1bar_plus
        R = [_lt("−Imλ < γI", -np.imag(lam), gammaI), _lt("γI < q1+", gammaI, q)]
    elif tag == "ThmNpBAdj":
        q = 0.5 * (n - 1) + p1bar_plus
        R = [_lt("−q1+ < γ̃I", -q, gammaI), _lt("γ̃I < −Imλ", gammaI, -np.imag(lam))]
    else:
        raise UnknownTheoremTag(f"unknown theorem tag {tag!r}")
    return ThresholdReport(tag, R)


# forward tag -> (backward tag, record pairing forward index -> backward index)
DUAL_TAGS = {
    "ThmFw": ("ThmBw", None),
    "ThmE": ("ThmEBw", {0: 0, 1: 1, 2: 2}),
    "LemRc": ("LemRcBw", None),
    "LemRinMinus": ("LemRinMinusBw", {0: 0}),
    "LemRinPlus": ("LemRinPlusBw", {0: 0}),
    "LemRout": ("LemRoutBw", {0: 0}),
    "PropNe": ("PropNeBw", {0: 1, 1: 0}),
}


def dual_report(tag, s, alpha0, alphaI, alphaPlus, p1bar=0.0):
    """Backward report at the dual orders and weights of a forward statement."""
    bw, _ = DUAL_TAGS[tag]
    st, a0, aI, ap = dual_weights(s, alpha0, alphaI, alphaPlus)
    return threshold_evaluate(bw, s=st, alpha0=a0, alphaI=aI, alphaPlus=ap, p1bar=p1bar)
