"""Reduced normal operator at future timelike infinity and Mellin utilities.

The reduced operator on the half line is

    P = 1/2 (x D_x - 2 i^{-1} q1)(x D_x - 2 lam) + x^2 + p0,    D_x = -i d/dx,

so x D_x = -i d/ds in s = log x.  Solutions are sought in x^{2 gammaI} L^2(dx/x)
with rapid decay as x -> oo.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import AliasError, NoConvergence, ThresholdViolation


@dataclass(frozen=True)
class ReducedNormalOp:
    lam: complex
    q1: float = None
    p0: float = 0.0
    n: int = 3
    p1plus: float = 0.0

    def __post_init__(self):
        if self.q1 is None:
            object.__setattr__(self, "q1", 0.5 * (self.n - 1) + self.p1plus)

    @property
    def lam_tilde(self):
        return complex(self.lam) + 1j * self.q1

    def window(self):
        return -complex(self.lam).imag, float(self.q1)

    def symbol(self, zeta):
        """Mellin-transformed normal operator at x = 0."""
        return 0.5 * (zeta + 2j * self.q1) * (zeta - 2 * self.lam) + self.p0


# -------------------------------------------------------- boundary spectrum

def boundary_spectrum(op, tol=1e-12):
    """Indicial values zeta (roots of the normal operator symbol) and x-exponents a = i zeta.

    For p0 = 0 the roots are 2 lam and -2 i q1, with exponents 2 i lam and 2 q1.
    """
    lam, q = complex(op.lam), op.q1
    # 1/2 zeta^2 + (i q - lam) zeta - 2 i q lam + p0
    roots = np.roots([0.5, 1j * q - lam, -2j * q * lam + op.p0])
    if op.p0 == 0:
        roots = np.array([2 * lam, -2j * q])
    double = bool(abs(roots[0] - roots[1]) < tol * max(1.0, abs(roots[0])))
    return {"zeta": [complex(z) for z in roots], "exponents": [complex(1j * z) for z in roots],
            "double": double}


def _indicial_ode(op):
    """First-order system in s for the x -> 0 normal operator: u'' = (2 i lam + 2 q) u' - 4 i q lam u + 2 p0 u."""
    lam, q = complex(op.lam), op.q1

    def rhs(s, y):
        u, du = y
        return [du, (2j * lam + 2 * q) * du - 4j * q * lam * u + 2 * op.p0 * u]
    return rhs


def fit_exponents(s, u):
    """Exponents of a two-term exponential sum sampled on a uniform grid (linear prediction)."""
    u = np.asarray(u, dtype=complex)
    h = s[1] - s[0]
    A = np.column_stack([u[1:-1], u[:-2]])
    coef, *_ = np.linalg.lstsq(A, u[2:], rcond=None)
    z = np.roots([1.0, -coef[0], -coef[1]])
    return np.log(z.astype(complex)) / h


def shooting_exponents(op, x_range=(1e-4, 1e-2), samples=401, seed=0):
    """Integrate the x -> 0 model from generic data and recover both exponents."""
    rng = np.random.default_rng(seed)
    y0 = rng.normal(size=2) + 1j * rng.normal(size=2)
    s0, s1 = np.log(x_range[1]), np.log(x_range[0])
    s = np.linspace(s0, s1, samples)
    sol = integrate.solve_ivp(_indicial_ode(op), (s0, s1), y0.astype(complex), t_eval=s,
                              method="DOP853", rtol=1e-13, atol=1e-15)
    if not sol.success:
        raise NoConvergence(sol.message)
    return fit_exponents(sol.t, sol.y[0])


# ------------------------------------------------------------ collocation

def cheb(N):
    """Chebyshev points x_j = cos(pi j/N) and differentiation matrix (Trefethen)."""
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def clenshaw_curtis(N):
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
        v -= np.cos(N * theta[1:-1]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / N
    return w


@dataclass
class CollocationGrid:
    x_min: float = 1e-6
    x_max: float = 40.0
    N: int = 320

    def build(self):
        t, D = cheb(self.N)
        a, b = np.log(self.x_min), np.log(self.x_max)
        s = 0.5 * (b - a) * (t + 1.0) + a
        Ds = D * (2.0 / (b - a))
        w = clenshaw_curtis(self.N) * 0.5 * (b - a)
        return s, Ds, w


def conjugated_matrix(op, gammaI, grid):
    """Matrix of x^{-2 gammaI} P x^{2 gammaI} in s = log x (acting on v with u = x^{2 gammaI} v)."""
    s, Ds, w = grid.build()
    I = np.eye(s.size)
    Dx = -1j * Ds - 2j * gammaI * I            # x^{-2g} (x D_x) x^{2g}
    A = 0.5 * (Dx + 2j * op.q1 * I) @ (Dx - 2 * op.lam * I) + np.diag(np.exp(2 * s)) + op.p0 * I
    return s, A, w


def _check_window(op, gammaI):
    lo, hi = op.window()
    if not lo < gammaI < hi:
        raise ThresholdViolation(f"γI = {gammaI} outside the window −Imλ < γI < q1 = ({lo}, {hi})")


def smallest_singular_value(op, gammaI, grid=None):
    """sigma_min of the conjugated operator on L^2(ds) with Dirichlet truncation."""
    _check_window(op, gammaI)
    grid = grid or CollocationGrid()
    s, A, w = conjugated_matrix(op, gammaI, grid)
    sq = np.sqrt(w[1:-1])
    B = sq[:, None] * A[1:-1, 1:-1] / sq[None, :]
    return float(np.linalg.svd(B, compute_uv=False)[-1])


def solve_reduced(op, f, gammaI, grid=None, tol=1e-8):
    """Solve P u = f with u in x^{2 gammaI} L^2(dx/x), rapidly decaying at infinity.

    `f` is a callable of x.  Returns (x, u, info) on the collocation nodes.
    """
    _check_window(op, gammaI)
    grid = grid or CollocationGrid()
    s, A, w = conjugated_matrix(op, gammaI, grid)
    x = np.exp(s)
    rhs = np.asarray(f(x), dtype=complex) * x ** (-2.0 * gammaI)
    M = A[1:-1, 1:-1]
    v = np.zeros(s.size, dtype=complex)
    v[1:-1] = np.linalg.solve(M, rhs[1:-1])
    res = np.linalg.norm(M @ v[1:-1] - rhs[1:-1]) / max(np.linalg.norm(rhs[1:-1]), 1e-300)
    if not np.isfinite(res) or res > tol:
        raise NoConvergence(f"relative residual {res:.3g}")
    sq = np.sqrt(w[1:-1])
    sigma = float(np.linalg.svd(sq[:, None] * M / sq[None, :], compute_uv=False)[-1])
    return x, v * x ** (2.0 * gammaI), {"residual": float(res), "sigma_min": sigma}


def apply_reduced(op, u, du, d2u, x):
    """P u from u, u', u'' given in x (manufactured solutions)."""
    xD = -1j * x * du                      # x D_x u
    xD2 = -(x * du + x * x * d2u)          # (x D_x)^2 u
    return 0.5 * (xD2 + (2j * op.q1 - 2 * op.lam) * xD - 4j * op.q1 * op.lam * u) + (x * x + op.p0) * u


# ------------------------------------------------------------ conjugation

def simplified_matrix(lam_t, grid):
    s, Ds, w = grid.build()
    D = -1j * Ds
    return s, 0.5 * D @ D - 0.5 * lam_t ** 2 * np.eye(s.size) + np.diag(np.exp(2 * s)), w


def solve_simplified(lam_t, grid=None):
    """Solution of (1/2 (x D_x)^2 - lam_t^2/2 + x^2) w = 0 with w = 1 at x_min and w = 0 at x_max."""
    grid = grid or CollocationGrid(1e-3, 30.0, 200)
    s, A, _ = simplified_matrix(lam_t, grid)
    # nodes run from x_max (index 0) down to x_min (last index)
    M = A.copy().astype(complex)
    rhs = np.zeros(s.size, dtype=complex)
    M[0, :] = 0.0
    M[0, 0] = 1.0
    M[-1, :] = 0.0
    M[-1, -1] = 1.0
    rhs[-1] = 1.0
    w = np.linalg.solve(M, rhs)
    return np.exp(s), w, s


def conjugation_residual(op, x, u, s_grid=None):
    """max |x^{-q1-i lam} P u - (1/2 (xD)^2 - lam_t^2/2 + x^2) x^{-q1-i lam} u| relative to |u|.

    u is sampled at Chebyshev nodes in s = log x (as produced by solve_simplified).
    """
    if op.p0 != 0:
        raise ValueError("the conjugation identity needs p0 = 0")
    n = x.size - 1
    t, D = cheb(n)
    s = np.log(x)
    Ds = D * (2.0 / (s[0] - s[-1]))
    xD = lambda f: -1j * (Ds @ f)
    Pu = 0.5 * (xD(xD(u)) + 2j * op.q1 * xD(u)) - op.lam * (xD(u) + 2j * op.q1 * u) + x * x * u
    a = op.q1 + 1j * op.lam
    ut = x ** (-a) * u
    simple = 0.5 * xD(xD(ut)) - 0.5 * op.lam_tilde ** 2 * ut + x * x * ut
    return float(np.max(np.abs(x ** (-a) * Pu - simple)) / np.max(np.abs(ut))), \
        float(np.max(np.abs(simple)) / np.max(np.abs(ut)))


def injectivity_identity(lam_t, ut, dut, d2ut, x_lo=1e-8, x_hi=60.0):
    """Imaginary part of <Q ut, ut> in L^2(dx/x) for Q = (xD_x)^2 - lam_t^2 + 2 x^2.

    Integration by parts (no boundary terms for rapidly decaying ut vanishing at 0)
    gives -2 Re(lam_t) Im(lam_t) ||ut||^2.  Returns (lhs, rhs) by quadrature.
    """
    def Q(x):
        xD2 = -(x * dut(x) + x * x * d2ut(x))
        return xD2 - lam_t ** 2 * ut(x) + 2 * x * x * ut(x)

    lhs = integrate.quad(lambda s: (Q(np.exp(s)) * np.conj(ut(np.exp(s)))).imag,
                         np.log(x_lo), np.log(x_hi), limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    norm2 = integrate.quad(lambda s: abs(ut(np.exp(s))) ** 2, np.log(x_lo), np.log(x_hi),
                           limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    return lhs, -2.0 * lam_t.real * lam_t.imag * norm2


# ------------------------------------------------------------------ Mellin

@dataclass
class MellinPair:
    rho: np.ndarray
    sigma: np.ndarray
    gamma: float

    @property
    def h(self):
        return float(np.log(self.rho[1] / self.rho[0]))

    @property
    def lam(self):
        return self.sigma - 1j * self.gamma


def mellin_grid(s_min=-30.0, s_max=10.0, N=2048, gamma=0.0):
    """Geometric rho grid (uniform in log rho) and the matching dual grid in Re lambda."""
    s = s_min + (s_max - s_min) * np.arange(N) / N
    h = s[1] - s[0]
    sigma = 2 * np.pi * np.fft.fftfreq(N, d=h)
    return MellinPair(np.exp(s), np.fft.fftshift(sigma), gamma)


def mellin_transform(u, pair, direction="Forward", alias_tol=1e-10):
    """Trapezoid Mellin transform int rho^{-i lam} u drho/rho on Im lam = -gamma.

    Forward maps samples on pair.rho to samples on pair.sigma; Inverse is the
    exact discrete inverse.  AliasError if the weighted samples do not decay at
    both ends of the grid or the transform is not resolved at the band edge.
    """
    s = np.log(pair.rho)
    h = pair.h
    order = np.argsort(np.fft.fftfreq(s.size, d=h))
    if direction == "Forward":
        g = np.exp(-pair.gamma * s) * np.asarray(u, dtype=complex)
        scale = np.max(np.abs(g))
        if scale > 0 and max(abs(g[0]), abs(g[-1])) > alias_tol * scale:
            raise AliasError("samples do not decay at the ends of the rho grid")
        # phase of the grid origin: sum_j h e^{-i sigma s_j} g_j
        F = h * np.fft.fft(g) * np.exp(-1j * np.fft.fftfreq(s.size, d=h) * 2 * np.pi * s[0])
        F = F[order]
        Fmax = np.max(np.abs(F))
        if Fmax > 0 and max(abs(F[0]), abs(F[-1])) > alias_tol * Fmax:
            raise AliasError("bandwidth not resolved: transform is not small at the Nyquist edge")
        return F
    if direction == "Inverse":
        F = np.empty(s.size, dtype=complex)
        F[order] = np.asarray(u, dtype=complex)
        freq = np.fft.fftfreq(s.size, d=h) * 2 * np.pi
        g = np.fft.ifft(F * np.exp(1j * freq * s[0])) / h
        return g * np.exp(pair.gamma * s)
    raise ValueError(f"unknown direction {direction!r}")


def mellin_at(u_func, lam, s_max=6.0, h=0.005, decay=38.0):
    """Direct trapezoid evaluation of the Mellin transform of a function at arbitrary lam.

    The lower end of the log rho range is chosen so that rho^{Im lam} has
    decayed by e^{-decay}; u_func must itself decay as rho -> oo.
    """
    out = []
    for l in np.atleast_1d(lam):
        if l.imag <= 0:
            raise AliasError("need Im lam > 0 for a function that is O(1) at rho = 0")
        s = np.arange(-decay / l.imag, s_max + h / 2, h)
        wts = np.full(s.size, h)
        wts[0] = wts[-1] = 0.5 * h
        out.append(np.sum(wts * np.exp(-1j * l * s) * u_func(np.exp(s))))
    return np.array(out)


def weighted_norm_sq(u, pair):
    """||rho^{-gamma} u||^2 in L^2(drho/rho) by the trapezoid rule."""
    g = np.exp(-pair.gamma * np.log(pair.rho)) * u
    return float(pair.h * np.sum(np.abs(g) ** 2))


def line_norm_sq(F, pair):
    """(1/2 pi) int |M u|^2 d Re(lam) over the dual grid."""
    dsig = 2 * np.pi / (pair.rho.size * pair.h)
    return float(np.sum(np.abs(F) ** 2) * dsig / (2 * np.pi))


def gamma_check(lams):
    """Mellin transform of exp(-rho) against Gamma(-i lam)."""
    lams = np.atleast_1d(lams)
    got = mellin_at(lambda r: np.exp(-r), lams)
    return got, special.gamma(-1j * lams)


# ----------------------------------------------------- semiclassical radial points

def semiclassical_field(x, y, xi, eta, sign=1):
    """2(xi - sign)(x d_x + eta d_eta) - 2|eta|_k^2 d_xi + x(4 k eta d_y - 2 (d_y k) eta eta d_eta)

    with k^{ij} = (1 + |y|^2/4)^2 delta^{ij}.  Returned in the order (x, y, xi, eta).
    """
    y, eta = np.atleast_1d(y).astype(float), np.atleast_1d(eta).astype(float)
    q = 1.0 + 0.25 * y @ y
    k = q * q
    dk = q * y                     # d_{y^m} k
    e2 = eta @ eta
    fx = 2 * (xi - sign) * x
    fy = x * 4 * k * eta
    fxi = -2 * k * e2
    feta = 2 * (xi - sign) * eta - x * 2 * dk * e2
    return np.concatenate([[fx], fy, [fxi], feta])


def _char(xi, eta, sign, y):
    q = 1.0 + 0.25 * np.atleast_1d(y) @ np.atleast_1d(y)
    return 0.5 * xi * (xi - 2 * sign) + q * q * np.atleast_1d(eta) @ np.atleast_1d(eta)


def semiclassical_radial_points(sign=1, n=3, h=1e-6, scan=41):
    """The two radial sets over x = 0 with numerical verification.

    Returns {"in": point, "out": point, "field_norms", "eigs", "min_off_norm"}.
    Eigenvalues are those of the Jacobian in the (x, eta) directions.
    """
    m = n - 1
    y0 = np.zeros(m)
    pts = {"in": (2.0 * sign, np.zeros(m)), "out": (0.0, np.zeros(m))}
    out = {"in": pts["in"], "out": pts["out"], "field_norms": {}, "eigs": {}}
    for name, (xi, eta) in pts.items():
        out["field_norms"][name] = float(np.linalg.norm(semiclassical_field(0.0, y0, xi, eta, sign)))
        z0 = np.concatenate([[0.0], eta])
        J = np.zeros((m + 1, m + 1))
        for c in range(m + 1):
            e = np.zeros(m + 1)
            e[c] = h
            fp = semiclassical_field(z0[0] + e[0], y0, xi, z0[1:] + e[1:], sign)
            fm = semiclassical_field(z0[0] - e[0], y0, xi, z0[1:] - e[1:], sign)
            sel = np.concatenate([[0], np.arange(m + 2, 2 * m + 2)])
            J[:, c] = (fp[sel] - fm[sel]) / (2 * h)
        out["eigs"][name] = np.sort(np.linalg.eigvals(J).real)
    # on {x = 0} intersected with the characteristic set the field vanishes only at these points
    worst = np.inf
    for th in np.linspace(0, 2 * np.pi, scan, endpoint=False):
        # parametrize 1/2 (xi - sign)^2 + |eta|^2 = 1/2 (circle), eta along a fixed direction
        xi = sign + np.cos(th)
        eta = np.zeros(m)
        eta[0] = np.sin(th) / np.sqrt(2.0)
        if abs(_char(xi, eta, sign, y0)) > 1e-12:
            raise AssertionError("parametrization left the characteristic set")
        d = min(abs(xi - 2 * sign), abs(xi)) + abs(eta[0])
        if d > 1e-3:
            worst = min(worst, float(np.linalg.norm(semiclassical_field(0.0, y0, xi, eta, sign))))
    out["min_off_norm"] = worst
    return out
