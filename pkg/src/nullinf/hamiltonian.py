"""Edge-b principal symbols and Hamiltonian vector fields.

A phase point carries base chart coordinates (rho, x, y) and the fiber
covector (zeta, xi, eta) with respect to drho/rho, dx/x, dy/x.  Hamilton's
equations in these variables read

    rho' = rho p_zeta        zeta' = -rho p_rho
    x'   = x p_xi            xi'   = -x p_x - eta . p_eta
    y'   = x p_eta           eta'  = eta p_xi - x p_y

Field components are returned in the order
(rho d_rho, x d_x, x d_y[0..n-2], d_xi, d_eta[0..n-2], d_zeta).

Fiber infinity is covered by two projective charts:
ZetaLarge uses rho_inf = 1/|zeta|, xi_hat = xi/zeta, eta_hat = eta/zeta;
XiLarge uses rho_inf = 1/|xi|, zeta_hat = zeta/xi, eta_hat = eta/xi.
The rescaled field rho_inf H is returned as a coordinate velocity in the
order (rho, x, y, rho_inf, hat, eta_hat).
"""

from dataclasses import dataclass

import numpy as np

from .errors import FiberChartError, NotCritical, StepError, ToleranceAmbiguous
from .geometry import ChartPoint, dual_metric_raw, NEAR_I0

ZETA_LARGE = "ZetaLarge"
XI_LARGE = "XiLarge"
HAT_LIMIT = 1e6


@dataclass
class PhasePoint:
    base: ChartPoint
    xi: float
    eta: np.ndarray
    zeta: float

    def __post_init__(self):
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if self.eta.size != self.base.y.size:
            raise ValueError("eta must have n-1 components")

    @property
    def covector(self):
        return np.concatenate([[self.zeta, self.xi], self.eta])


@dataclass
class CompactPhasePoint:
    """Point of the fiber-compactified phase space.

    `hat` is xi_hat in ZetaLarge and zeta_hat in XiLarge; `sign` is the sign of
    zeta (ZetaLarge) or xi (XiLarge).
    """

    base: ChartPoint
    fiber_chart: str
    rho_inf: float
    hat: float
    eta_hat: np.ndarray
    sign: float = 1.0

    def __post_init__(self):
        self.eta_hat = np.atleast_1d(np.asarray(self.eta_hat, dtype=float))
        if self.fiber_chart not in (ZETA_LARGE, XI_LARGE):
            raise ValueError(f"unknown fiber chart {self.fiber_chart!r}")
        vals = np.concatenate([[self.hat], self.eta_hat])
        if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) > HAT_LIMIT:
            raise FiberChartError("hat coordinates outside the fiber chart")

    def direction(self):
        """Unit-scale covector n_hat with covector = n_hat / rho_inf."""
        s = self.sign
        if self.fiber_chart == ZETA_LARGE:
            return s * np.concatenate([[1.0, self.hat], self.eta_hat])
        return s * np.concatenate([[self.hat, 1.0], self.eta_hat])

    def coords(self):
        b = self.base
        return np.concatenate([[b.rho, b.x], b.y, [self.rho_inf, self.hat], self.eta_hat])


def compactify(p, fiber_chart=None):
    w = p.covector
    if fiber_chart is None:
        fiber_chart = ZETA_LARGE if abs(w[1]) <= 2.75 * abs(w[0]) else XI_LARGE
    lead = w[0] if fiber_chart == ZETA_LARGE else w[1]
    if lead == 0:
        raise FiberChartError(f"{fiber_chart} needs a nonzero leading fiber coordinate")
    other = w[1] if fiber_chart == ZETA_LARGE else w[0]
    return CompactPhasePoint(p.base, fiber_chart, 1.0 / abs(lead), other / lead,
                             w[2:] / lead, float(np.sign(lead)))


def decompactify(c):
    if c.rho_inf <= 0:
        raise FiberChartError("fiber infinity has no finite covector")
    w = c.direction() / c.rho_inf
    return PhasePoint(c.base, w[1], w[2:], w[0])


# ------------------------------------------------------------- symbols

def _is_exact(m):
    return m.kind in ("Minkowski", "ModelP1") or (m.kind == "Perturbation" and not m.perturbation)


def symbol_raw(m, sign, rho, x, y, w):
    G = dual_metric_raw(m, sign, rho, x, y)
    return float(w @ G @ w)


def symbol_value(m, p):
    return symbol_raw(m, p.base.chart.sign, p.base.rho, p.base.x, p.base.y, p.covector)


def characteristic_component(m, p, tol=1e-8):
    v = symbol_value(m, p)
    if abs(v) >= tol:
        return "OffCharacteristic"
    disc = (p.xi - p.zeta) if p.base.chart.kind == NEAR_I0 else p.zeta
    if abs(disc) < tol:
        raise ToleranceAmbiguous("symbol and sign discriminant both below tolerance")
    return "SigmaPlus" if disc > 0 else "SigmaMinus"


def _mink_partials(sign, x, y, w):
    """Exact (p_w, rho p_rho, x p_x, p_y) for the Minkowski symbol."""
    zeta, xi, eta = w[0], w[1], w[2:]
    q = 1.0 + 0.25 * float(y @ y)
    kk = q * q
    e2 = float(eta @ eta)
    pw = np.empty_like(w)
    pw[0] = sign * xi
    pw[1] = sign * (zeta - xi) + 0.5 * x * x * xi
    pw[2:] = 2.0 * kk * eta
    return pw, 0.0, 0.5 * x * x * xi * xi, q * y * e2


def _d4(f, h):
    """Fourth-order central difference of a scalar function at 0."""
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def _fd_partials(m, sign, rho, x, y, w):
    """Base derivatives by finite differences; fiber derivatives are exact.

    rho p_rho and x p_x are taken as d/dtau p(rho e^tau), which keeps the
    stencil inside rho, x >= 0 and vanishes on the boundary faces.
    """
    G = dual_metric_raw(m, sign, rho, x, y)
    pw = 2.0 * G @ w
    h = 1e-4
    rp = _d4(lambda t: symbol_raw(m, sign, rho * np.exp(t), x, y, w), h)
    xp = _d4(lambda t: symbol_raw(m, sign, rho, x * np.exp(t), y, w), h)
    py = np.empty(y.size)
    for j in range(y.size):
        hj = 1e-4 * (1.0 + abs(y[j]))

        def fy(t, j=j):
            yy = y.copy()
            yy[j] += t
            return symbol_raw(m, sign, rho, x, yy, w)

        py[j] = _d4(fy, hj)
    out = (pw, rp, xp, py)
    if not all(np.all(np.isfinite(v)) for v in out):
        raise StepError("finite-difference stencil produced non-finite values")
    return out


def partials(m, sign, rho, x, y, w, method="auto"):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.asarray(w, dtype=float)
    if method == "exact" or (method == "auto" and _is_exact(m)):
        if not _is_exact(m):
            raise ValueError("no closed form for this metric")
        return _mink_partials(sign, x, y, w)
    return _fd_partials(m, sign, rho, x, y, w)


def field_raw(m, sign, rho, x, y, w, method="auto"):
    pw, rp, xp, py = partials(m, sign, rho, x, y, w, method)
    eta = w[2:]
    k = eta.size
    H = np.empty(2 * k + 4)
    H[0] = pw[0]
    H[1] = pw[1]
    H[2:2 + k] = pw[2:]
    H[2 + k] = -xp - float(eta @ pw[2:])
    H[3 + k:3 + 2 * k] = eta * pw[1] - x * py
    H[3 + 2 * k] = -rp
    return H


def hamiltonian_field(m, p, method="auto"):
    b = p.base
    return field_raw(m, b.chart.sign, b.rho, b.x, b.y, p.covector, method)


def split_field(H):
    """Frame components -> (base part, fiber part in (zeta, xi, eta) order)."""
    k = (H.size - 4) // 2
    base = H[:2 + k]
    fib = np.concatenate([[H[-1], H[2 + k]], H[3 + k:3 + 2 * k]])
    return base, fib


# ------------------------------------------------------- rescaled field

def rescaled_raw(m, sign, fiber_chart, z, fsign, method="auto"):
    """rho_inf H at compact coordinates z = (rho, x, y, rho_inf, hat, eta_hat)."""
    k = (z.size - 4) // 2
    rho, x = z[0], z[1]
    y = z[2:2 + k]
    rinf, hat = z[2 + k], z[3 + k]
    eh = z[4 + k:]
    if fiber_chart == ZETA_LARGE:
        nh = fsign * np.concatenate([[1.0, hat], eh])
        lead = 0
    else:
        nh = fsign * np.concatenate([[hat, 1.0], eh])
        lead = 1
    H = field_raw(m, sign, rho, x, y, nh, method)
    base, fib = split_field(H)
    out = np.empty_like(z)
    out[0] = rho * base[0]
    out[1] = x * base[1]
    out[2:2 + k] = x * base[2:]
    hl = fib[lead]
    out[2 + k] = -fsign * rinf * hl
    out[3 + k] = fsign * (fib[1 - lead] - hat * hl)
    out[4 + k:] = fsign * (fib[2:] - eh * hl)
    return out


def rescaled_field(m, c, method="auto"):
    return rescaled_raw(m, c.base.chart.sign, c.fiber_chart, c.coords(), c.sign, method)


def coordinate_names(fiber_chart, n):
    k = n - 1
    hat = "xi_hat" if fiber_chart == ZETA_LARGE else "zeta_hat"
    return (["rho", "x"] + [f"y{j}" for j in range(k)] + ["rho_inf", hat]
            + [f"eta_hat{j}" for j in range(k)])


def compact_from_coords(chart, fiber_chart, z, fsign, pole=-1.0):
    k = (z.size - 4) // 2
    base = ChartPoint(chart, max(z[0], 0.0), max(z[1], 0.0), z[2:2 + k], pole)
    return CompactPhasePoint(base, fiber_chart, z[2 + k], z[3 + k], z[4 + k:], fsign)


def jacobian(m, c, h=1e-3, method="auto"):
    z = c.coords()
    sign = c.base.chart.sign
    J = np.empty((z.size, z.size))
    for j in range(z.size):
        e = np.zeros_like(z)
        e[j] = h
        f = lambda t: rescaled_raw(m, sign, c.fiber_chart, z + t * e / h, c.sign, method)
        J[:, j] = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
    return J


RADIAL_BLOCKS = {
    "RinMinus": ("rho", "x", "eta_hat"),
    "Rc": ("rho_inf", "rho", "x", "zeta_hat"),
    "Rout": ("x", "eta_hat"),
    "RinPlus": ("x", "rho", "eta_hat"),
}


def _block_indices(names, block):
    idx = []
    for b in block:
        if b == "eta_hat":
            idx += [i for i, nm in enumerate(names) if nm.startswith("eta_hat")]
        else:
            idx.append(names.index(b))
    return idx


def _tag(ev, tol=1e-8):
    if np.all(ev > tol):
        return "source"
    if np.all(ev < -tol):
        return "sink"
    return "saddle"


def linearize_at_point(m, c, radial_set=None, tol=1e-8, method="auto"):
    """Jacobian of the rescaled field at a critical point, with eigenvalue blocks."""
    F = rescaled_field(m, c, method)
    if np.max(np.abs(F)) > tol:
        raise NotCritical(f"|field| = {np.max(np.abs(F)):.3g} exceeds {tol}")
    J = jacobian(m, c, method=method)
    ev = np.linalg.eigvals(J)
    ev = ev[np.lexsort((ev.imag, ev.real))]
    names = coordinate_names(c.fiber_chart, c.base.n)
    out = {"jacobian": J, "eigenvalues": ev, "names": names, "blocks": {}}
    sets = [radial_set] if radial_set else [
        s for s, b in RADIAL_BLOCKS.items()
        if all(nm in names or nm == "eta_hat" for nm in b)]
    for s in sets:
        idx = _block_indices(names, RADIAL_BLOCKS[s])
        sub = J[np.ix_(idx, idx)]
        bev = np.linalg.eigvals(sub)
        bev = np.sort(bev.real) if np.max(np.abs(bev.imag)) < 1e-12 else bev
        out["blocks"][s] = {"coords": [names[i] for i in idx], "diag": np.diag(sub).copy(),
                            "eigenvalues": bev, "tag": _tag(np.real(bev))}
    return out
