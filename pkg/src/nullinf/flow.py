"""Null-bicharacteristic flows over null infinity.

Closed-form flows of the model symbol at x = 0, an adaptive integrator of the
rescaled Hamiltonian field with base and fiber chart switching, asymptotic
classification, and Newton location of the radial sets.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .errors import DomainError, StepFailure
from .geometry import ChartId, ChartPoint, NEAR_I0, NEAR_IPLUS, sphere_kinv
from .hamiltonian import (XI_LARGE, ZETA_LARGE, CompactPhasePoint, compact_from_coords,
                          rescaled_raw, symbol_raw)

CLASSES = ("ToRinMinus", "ToRc", "ToRout", "ToRinPlus", "ExitsChart", "Undetermined")


# ------------------------------------------------------------ closed form

def closed_form_flow(chart, state, s, tol=1e-8):
    """Time-s flow of the model Hamiltonian over x = 0.

    state = (rho, zeta, xi, eta); eta may be a vector.  The state must lie on
    the characteristic set; y is constant along these flows.
    """
    kind = chart.kind if isinstance(chart, ChartId) else chart
    rho, zeta, xi, eta = state
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    e2 = float(eta @ eta)
    sgn = 1.0 if kind == NEAR_I0 else -1.0
    val = sgn * (zeta * xi - 0.5 * xi * xi) + e2
    if abs(val) > tol * (zeta * zeta + xi * xi + e2):
        raise DomainError("state is not on the characteristic set")
    if zeta == 0.0:
        a = 1.0 + sgn * s * xi
        if a <= 0:
            raise DomainError("s outside the maximal interval of existence")
        return rho * a, zeta, xi / a, eta / a
    if kind == NEAR_I0:
        A = 1.0 + xi / (2 * zeta) * np.expm1(2 * zeta * s)
        if A <= 0:
            raise DomainError("s outside the maximal interval of existence")
        den = 2 * zeta * np.exp(-2 * zeta * s) * A
        return rho * A, zeta, 2 * xi * zeta / den, eta * np.exp(zeta * s) / A
    A = 1.0 + xi / (2 * zeta) * np.expm1(-2 * zeta * s)
    if A <= 0:
        raise DomainError("s outside the maximal interval of existence")
    den = 2 * zeta * np.exp(2 * zeta * s) * A
    return rho * A, zeta, 2 * xi * zeta / den, eta * np.exp(-zeta * s) / A


# ---------------------------------------------------------- chart changes

def chart_transfer(chart_from, chart_to, fiber_chart, z, fsign):
    """Move a compact phase state between NearI0(T0) and NearIplus(T1).

    Both directions share the form rho' = 1/(D - 1/rho) with D = |T0 - T1|,
    x' = x/sqrt(a), a = rho'/rho, and covector components
    zeta' = (0.5 (1 + a) xi - zeta)/a, xi' = xi, eta' = eta/sqrt(a).
    """
    D = abs(chart_from.T - chart_to.T)
    k = (z.size - 4) // 2
    rho, x = z[0], z[1]
    if not rho > 1.0 / D:
        raise DomainError("point is not in the chart overlap")
    rho2 = 1.0 / (D - 1.0 / rho)
    a = rho2 / rho
    n_hat = _direction(fiber_chart, z, fsign)
    w = np.empty_like(n_hat)
    w[0] = (0.5 * (1 + a) * n_hat[1] - n_hat[0]) / a
    w[1] = n_hat[1]
    w[2:] = n_hat[2:] / np.sqrt(a)
    fc = ZETA_LARGE if abs(w[1]) <= 2.75 * abs(w[0]) else XI_LARGE
    out = z.copy()
    out[0] = rho2
    out[1] = x / np.sqrt(a)
    fs, zz = _recompact(fc, w, z[2 + k])
    out[2 + k:] = zz
    return fc, out, fs


def _direction(fiber_chart, z, fsign):
    k = (z.size - 4) // 2
    hat, eh = z[3 + k], z[4 + k:]
    if fiber_chart == ZETA_LARGE:
        return fsign * np.concatenate([[1.0, hat], eh])
    return fsign * np.concatenate([[hat, 1.0], eh])


def _recompact(fiber_chart, w, rinf):
    """w = covector * rho_inf (old); returns new sign and (rho_inf, hat, eta_hat)."""
    lead, other = (0, 1) if fiber_chart == ZETA_LARGE else (1, 0)
    lw = w[lead]
    return float(np.sign(lw)), np.concatenate([[rinf / abs(lw), w[other] / lw], w[2:] / lw])


def canonical_fiber(fiber_chart, z, fsign):
    """Put a state into ZetaLarge when |xi_hat| <= 2.75, else XiLarge."""
    k = (z.size - 4) // 2
    hat = z[3 + k]
    if fiber_chart == ZETA_LARGE and abs(hat) > 2.75:
        return fiber_switch(fiber_chart, z, fsign)
    if fiber_chart == XI_LARGE and abs(hat) * 2.75 >= 1.0:
        return fiber_switch(fiber_chart, z, fsign)
    return fiber_chart, z, fsign


def fiber_switch(fiber_chart, z, fsign):
    k = (z.size - 4) // 2
    w = _direction(fiber_chart, z, fsign)
    fc = XI_LARGE if fiber_chart == ZETA_LARGE else ZETA_LARGE
    out = z.copy()
    fs, zz = _recompact(fc, w, z[2 + k])
    out[2 + k:] = zz
    return fc, out, fs


# ----------------------------------------------------------- radial sets

def radial_distance(kind, fiber_chart, z, fsign):
    """Conic distance to each radial set of the model, keyed by set name.

    Radial sets are conic, so rho_inf is ignored.
    """
    k = (z.size - 4) // 2
    rho, x, y = z[0], z[1], z[2:2 + k]
    hat, eh = z[3 + k], z[4 + k:]
    e = float(np.linalg.norm(eh))
    out = {}
    if fiber_chart == ZETA_LARGE and fsign > 0:
        if kind == NEAR_I0:
            out["RinMinus"] = float(np.sqrt(rho ** 2 + x ** 2 + (hat - 2) ** 2 + e ** 2))
        else:
            out["RinPlus"] = float(np.sqrt(rho ** 2 + x ** 2 + (hat - 2) ** 2 + e ** 2))
    if fiber_chart == ZETA_LARGE:
        out_sign = -1.0 if kind == NEAR_I0 else 1.0
        if fsign == out_sign:
            out["Rout"] = float(np.sqrt(x ** 2 + hat ** 2 + e ** 2))
    if fiber_chart == XI_LARGE and fsign > 0 and kind == NEAR_I0:
        kk = np.sqrt(sphere_kinv(y))
        out["Rc"] = float(np.sqrt(rho ** 2 + x ** 2 + hat ** 2 + (kk * e - np.sqrt(0.5)) ** 2))
    return out


def identify_radial(kind, fiber_chart, z, fsign, tol=1e-8):
    """Name and Sigma component of the radial set containing z, or None."""
    for comp, s in (("plus", fsign), ("minus", -fsign)):
        d = radial_distance(kind, fiber_chart, z, s)
        for name, dist in d.items():
            if dist < tol:
                return name, ("plus" if s == fsign else "minus")
    return None


# ------------------------------------------------------------ integrator

@dataclass
class FlowResult:
    s: np.ndarray
    z: list
    charts: list
    fiber_charts: list
    signs: list
    classification: str = "Undetermined"
    diagnostics: dict = field(default_factory=dict)

    def points(self):
        for s, z, c, fc, fs in zip(self.s, self.z, self.charts, self.fiber_charts, self.signs):
            yield s, compact_from_coords(c, fc, z, fs)


@dataclass
class FlowParams:
    s_max: float = 200.0
    direction: float = 1.0
    rtol: float = 1e-9
    atol: float = 1e-12
    method: str = "RK45"
    segment: float = 2.0
    switch_rho: float = 0.8
    T_shift: float = 10.0
    base_switching: bool = True
    dist_tol: float = 1e-4
    speed_tol: float = 1e-6
    s_end: float = None
    field_method: str = "auto"


def _sigma_sign(kind, w):
    return np.sign(w[1] - w[0]) if kind == NEAR_I0 else np.sign(w[0])


def _drift(m, chart, fc, z, fs):
    k = (z.size - 4) // 2
    w = _direction(fc, z, fs)
    w = w / np.linalg.norm(w)
    return abs(symbol_raw(m, chart.sign, z[0], z[1], z[2:2 + k], w))


def _speed(m, chart, fc, z, fs, method):
    F = rescaled_raw(m, chart.sign, fc, z, fs, method)
    k = (z.size - 4) // 2
    F[2 + k] = 0.0
    return float(np.linalg.norm(F))


def classify_state(m, chart, fc, z, fs, params, method="auto"):
    d = radial_distance(chart.kind, fc, z, fs)
    if not d:
        return None
    name = min(d, key=d.get)
    if d[name] < params.dist_tol and _speed(m, chart, fc, z, fs, method) < params.speed_tol:
        return "To" + name
    return None


def integrate_flow(m, start, params=None):
    """Integrate the rescaled Hamiltonian field from a compact phase point.

    An extra variable tracks the parameter of the unrescaled flow
    (d s_orig / d s = rho_inf, multiplied by the direction).
    """
    p = params or FlowParams()
    chart = start.base.chart
    other = ChartId(NEAR_IPLUS, chart.T - p.T_shift) if chart.kind == NEAR_I0 \
        else ChartId(NEAR_I0, chart.T + p.T_shift)
    fc, fs = start.fiber_chart, start.sign
    pole = start.base.pole
    z = start.coords().astype(float)
    k = (z.size - 4) // 2
    ri = 2 + k
    direc = float(np.sign(p.direction)) or 1.0
    s_total = p.s_max if p.s_end is None else p.s_end

    S, Z, CH, FC, FS = [0.0], [z.copy()], [chart], [fc], [fs]
    s_orig = [0.0]
    diag = {"chart_switches": 0, "fiber_switches": 0, "max_symbol_drift": _drift(m, chart, fc, z, fs),
            "sigma_flips": 0}
    sigma0 = _sigma_sign(chart.kind, _direction(fc, z, fs))
    s = 0.0
    so = 0.0
    status = "Undetermined"
    if p.s_end is None:
        c0 = classify_state(m, chart, fc, z, fs, p, p.field_method)
        if c0 is not None:
            status = c0
    while status == "Undetermined" and s < s_total - 1e-12:
        sign, cur_fc, cur_fs = chart.sign, fc, fs

        def rhs(t, u):
            out = np.empty_like(u)
            out[:-1] = direc * rescaled_raw(m, sign, cur_fc, u[:-1], cur_fs, p.field_method)
            out[-1] = direc * u[ri]
            return out

        lim = 3.0 if fc == ZETA_LARGE else 0.4
        ev_fiber = lambda t, u: abs(u[3 + k]) - lim
        ev_fiber.terminal = True
        ev_exit = lambda t, u: max(u[0], u[1]) - 1.0
        ev_exit.terminal = True
        events = [ev_fiber, ev_exit]
        if p.base_switching:
            ev_chart = lambda t, u: u[0] - p.switch_rho
            ev_chart.terminal = True
            ev_chart.direction = 1
            events.append(ev_chart)
        seg = min(p.segment, s_total - s)
        sol = solve_ivp(rhs, (s, s + seg), np.append(z, so), method=p.method, rtol=p.rtol,
                        atol=p.atol, events=events)
        if sol.status == -1:
            raise StepFailure(sol.message)
        for t, u in zip(sol.t[1:], sol.y.T[1:]):
            S.append(t)
            Z.append(u[:-1].copy())
            CH.append(chart)
            FC.append(fc)
            FS.append(fs)
            s_orig.append(u[-1])
            diag["max_symbol_drift"] = max(diag["max_symbol_drift"], _drift(m, chart, fc, u[:-1], fs))
            sg = _sigma_sign(chart.kind, _direction(fc, u[:-1], fs))
            if sg != sigma0 and sg != 0:
                diag["sigma_flips"] += 1
        s = sol.t[-1]
        z = sol.y[:-1, -1].copy()
        so = sol.y[-1, -1]
        if sol.status == 1:
            if len(sol.t_events[1]) and max(z[0], z[1]) >= 1.0 - 1e-9:
                status = "ExitsChart"
                break
            if p.base_switching and len(sol.t_events[2]):
                fc, z, fs = chart_transfer(chart, other, fc, z, fs)
                chart, other = other, chart
                diag["chart_switches"] += 1
                sigma0 = _sigma_sign(chart.kind, _direction(fc, z, fs))
            elif len(sol.t_events[0]):
                fc, z, fs = fiber_switch(fc, z, fs)
                diag["fiber_switches"] += 1
            S.append(s)
            Z.append(z.copy())
            CH.append(chart)
            FC.append(fc)
            FS.append(fs)
            s_orig.append(so)
        if p.s_end is None:
            c = classify_state(m, chart, fc, z, fs, p, p.field_method)
            if c is not None:
                status = c
    diag["s_orig"] = np.array(s_orig)
    diag["pole"] = pole
    res = FlowResult(np.array(S) * direc, Z, CH, FC, FS, status, diag)
    if p.s_end is None and status == "Undetermined":
        res.classification = classify_asymptotics(res, m, p)
    return res


def classify_asymptotics(res, m=None, params=None):
    """Classification of the end of a trajectory.

    Near a radial set (conic distance below 1e-4) with speed below 1e-6 the
    set is returned; a trajectory reaching rho = 1 or x = 1 exits the chart.
    """
    p = params or FlowParams()
    if not res.z:
        raise ValueError("empty trajectory")
    if res.classification == "ExitsChart":
        return "ExitsChart"
    z = res.z[-1]
    if max(z[0], z[1]) >= 1.0 - 1e-9:
        return "ExitsChart"
    from .geometry import minkowski
    m = m or minkowski()
    c = classify_state(m, res.charts[-1], res.fiber_charts[-1], z, res.signs[-1], p)
    return c or "Undetermined"


# ------------------------------------------------------------ start grids

def sigma_plus_start(chart, rho, hat, fiber_chart, sign, n=3, rho_inf=0.0, y=None):
    """Point on the plus component of the characteristic set over x = 0.

    The eta_hat magnitude is fixed by the symbol and eta_hat points along the
    first sphere coordinate.
    """
    y = np.zeros(n - 1) if y is None else np.asarray(y, dtype=float)
    kk = sphere_kinv(y)
    s = chart.sign
    if fiber_chart == ZETA_LARGE:
        e2 = s * (0.5 * hat * hat - hat) / kk
    else:
        e2 = s * (0.5 - hat) / kk
    if e2 < -1e-15:
        raise DomainError("no characteristic point with these coordinates")
    eh = np.zeros(n - 1)
    eh[0] = np.sqrt(max(e2, 0.0))
    c = CompactPhasePoint(ChartPoint(chart, rho, 0.0, y), fiber_chart, rho_inf, hat, eh, sign)
    w = c.direction()
    if _sigma_sign(chart.kind, w) <= 0:
        raise DomainError("point is on the minus component")
    return c


def expected_class(kind, rho, w, direction):
    """Classification predicted by the explicit flows over x = 0.

    w = (zeta, xi, eta) direction on the plus component.
    """
    zeta, xi = w[0], w[1]
    e = float(np.linalg.norm(w[2:]))
    on_win = zeta > 0 and abs(xi - 2 * zeta) < 1e-12 * abs(zeta) and e < 1e-12 * abs(zeta)
    if kind == NEAR_I0:
        if direction > 0:
            if rho == 0:
                return "ToRinMinus" if zeta > 0 else "ToRout"
            return "ToRinPlus" if on_win else "ToRout"
        return "ToRinMinus" if (on_win and rho > 0) else "ToRc"
    if direction > 0:
        return "ToRinPlus" if on_win else "ToRout"
    if rho == 0:
        # I+ is invariant; backwards xi tends to 2 zeta
        return "ToRinPlus"
    if on_win:
        return "ToRinMinus"
    return "ToRc"


def is_radial_start(kind, fiber_chart, z, fsign, tol=1e-12):
    return identify_radial(kind, fiber_chart, z, fsign, tol) is not None


def phase_portrait(m, chart, rhos=(0.0, 0.3), n_dirs=24, directions=(1, -1), params=None):
    """Classify trajectories from a grid of fiber directions on the plus component."""
    starts = portrait_starts(chart, rhos, n_dirs, m.n)
    rows = []
    for c in starts:
        for d in directions:
            p = params or FlowParams()
            p = FlowParams(**{**p.__dict__, "direction": d})
            res = integrate_flow(m, c, p)
            w = c.direction()
            exp = expected_class(chart.kind, c.base.rho, w, d)
            rows.append({"rho": c.base.rho, "fiber_chart": c.fiber_chart, "sign": c.sign,
                         "hat": c.hat, "eta_hat": float(c.eta_hat[0]), "direction": d,
                         "classification": res.classification, "expected": exp,
                         "s_end": float(abs(res.s[-1])),
                         "chart_switches": res.diagnostics["chart_switches"]})
    return rows


def portrait_starts(chart, rhos, n_dirs, n=3):
    """Grid over one fiber: ZetaLarge hats in [-3, 3] for both signs, XiLarge zeta_hat in [-0.4, 0.4]."""
    out = []
    for rho in rhos:
        for sign in (1.0, -1.0):
            for hat in np.linspace(-3.0, 3.0, n_dirs + 1):
                try:
                    c = sigma_plus_start(chart, rho, hat, ZETA_LARGE, sign, n)
                except DomainError:
                    continue
                if not is_radial_start(chart.kind, c.fiber_chart, c.coords(), c.sign):
                    out.append(c)
            for hat in np.linspace(-0.4, 0.4, max(n_dirs // 3, 2) + 1):
                try:
                    c = sigma_plus_start(chart, rho, hat, XI_LARGE, sign, n)
                except DomainError:
                    continue
                if not is_radial_start(chart.kind, c.fiber_chart, c.coords(), c.sign):
                    out.append(c)
    return out


# ------------------------------------------------------------ locate

def locate_radial_sets(m, chart, rhos=(0.0, 0.4), tol=1e-8, include_minus=False):
    """Newton-refined zeros of the rescaled field over x = 0 at fiber infinity.

    Unknowns are (rho, hat, |eta_hat|) with eta_hat along the first sphere
    coordinate; the symbol is appended to the residual so that only points of
    the characteristic set are kept.
    """
    n = m.n
    k = n - 1
    found = {}
    for fc, hats in ((ZETA_LARGE, np.linspace(-3, 3, 13)), (XI_LARGE, np.linspace(-0.4, 0.4, 5))):
        for fs in (1.0, -1.0):
            for rho0 in rhos:
                for h0 in hats:
                    for a0 in np.linspace(0.0, 1.5, 7):
                        def resid(v):
                            z = np.zeros(2 * k + 4)
                            z[0], z[3 + k], z[4 + k] = v[0], v[1], v[2]
                            F = rescaled_raw(m, chart.sign, fc, z, fs)
                            w = _direction(fc, z, fs)
                            return np.append(F, symbol_raw(m, chart.sign, v[0], 0.0, z[2:2 + k], w))

                        v0 = np.array([rho0, h0, a0])
                        r0 = resid(v0)
                        if np.linalg.norm(r0) > 2.0:
                            continue
                        sol = least_squares(resid, v0, method="lm", xtol=1e-15, ftol=1e-15,
                                            gtol=1e-15)
                        if np.max(np.abs(resid(sol.x))) > 1e-12 or not -1e-12 < sol.x[0] < 0.95:
                            continue
                        z = np.zeros(2 * k + 4)
                        z[0], z[3 + k], z[4 + k] = sol.x
                        z[0] = max(z[0], 0.0)
                        z[4 + k] = abs(z[4 + k])
                        z[np.abs(z) < 1e-13] = 0.0
                        zfc, z, zfs = canonical_fiber(fc, z, fs)
                        ident = identify_radial(chart.kind, zfc, z, zfs, tol)
                        if ident is None:
                            key = ("unidentified", round(sol.x[0], 6), round(sol.x[1], 6))
                        else:
                            key = ident
                        if ident is not None and ident[1] == "minus" and not include_minus:
                            continue
                        if key not in found:
                            found[key] = compact_from_coords(chart, zfc, z, zfs)
    return [(c, key) for key, c in sorted(found.items(), key=lambda kv: str(kv[0]))]


# ------------------------------------------------------- oracle comparison

def random_characteristic_start(rng, chart, n=3):
    """Random (rho, zeta, xi, eta) over x = 0 on the plus component with a finite closed-form flow."""
    rho = rng.uniform(0.05, 0.3)
    if chart.kind == NEAR_I0:
        zeta = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.5)
        xi = rng.uniform(2 * zeta, 2 * zeta + 2) if zeta > 0 else rng.uniform(0.0, 2.0)
    else:
        zeta = rng.uniform(0.3, 1.5)
        xi = rng.uniform(0.0, 2 * zeta)
    e2 = chart.sign * (0.5 * xi * xi - xi * zeta)
    eta = np.zeros(n - 1)
    direction = rng.normal(size=n - 1)
    eta = np.sqrt(max(e2, 0.0)) * direction / np.linalg.norm(direction)
    return rho, zeta, xi, eta


def oracle_comparison(m, n_starts=200, seed=0, s_end=1.5):
    """Integrated flow against the explicit flow maps at random characteristic starts.

    Returns the worst relative error over (rho, zeta, xi, eta) and the worst
    symbol drift.  Base-chart switching is disabled so both routes stay in
    the starting chart.
    """
    from .geometry import near_i0, near_iplus
    from .hamiltonian import PhasePoint, compactify, decompactify
    rng = np.random.default_rng(seed)
    worst, drift, rows = 0.0, 0.0, []
    for i in range(n_starts):
        chart = near_i0() if i % 2 == 0 else near_iplus()
        rho, zeta, xi, eta = random_characteristic_start(rng, chart, m.n)
        p = PhasePoint(ChartPoint(chart, rho, 0.0, np.zeros(m.n - 1)), xi, eta, zeta)
        res = integrate_flow(m, compactify(p), FlowParams(s_end=s_end, base_switching=False))
        s_orig = res.diagnostics["s_orig"][-1]
        q = decompactify(compact_from_coords(chart, res.fiber_charts[-1], res.z[-1], res.signs[-1]))
        ref = closed_form_flow(chart, (rho, zeta, xi, eta), s_orig)
        got = (q.base.rho, q.zeta, q.xi, q.eta)
        errs = [abs(got[k] - ref[k]) / max(abs(ref[k]), 1e-300) for k in range(3)]
        errs.append(np.linalg.norm(got[3] - ref[3]) / max(np.linalg.norm(ref[3]), 1.0))
        err = float(max(errs))
        worst = max(worst, err)
        drift = max(drift, res.diagnostics["max_symbol_drift"])
        rows.append({"chart": chart.kind, "rho": rho, "zeta": zeta, "xi": xi, "s_orig": float(s_orig),
                     "rel_error": err, "symbol_drift": float(res.diagnostics["max_symbol_drift"])})
    return {"max_rel_error": worst, "max_symbol_drift": drift, "rows": rows}
