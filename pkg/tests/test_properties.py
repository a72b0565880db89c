import numpy as np
from hypothesis import given, settings, strategies as st

from nullinf.flow import closed_form_flow
from nullinf.geometry import ChartPoint, from_chart, minkowski, near_i0, near_iplus, to_chart
from nullinf.hamiltonian import PhasePoint, hamiltonian_field, symbol_value
from nullinf.multiplier import dual_weights
from nullinf.normop import mellin_grid, mellin_transform
from nullinf.wavesolver import ForcingSpec, NormSpec, grid_for, solve_spherical_forward, weighted_norm, with_weight

M = minkowski()
unit = st.floats(0.02, 0.98)
coef = st.floats(-3.0, 3.0)
charts = st.sampled_from(["NearI0", "NearIplus"])


def make_chart(kind, T=0.0):
    return near_i0(T) if kind == "NearI0" else near_iplus(T)


def symbol(chart, rho, x, y, zeta, xi, eta):
    return symbol_value(M, PhasePoint(ChartPoint(chart, rho, x, np.asarray(y)), xi, np.asarray(eta), zeta))


@settings(max_examples=200, deadline=None)
@given(charts, st.floats(-2, 2), unit, unit)
def test_chart_round_trip(kind, T, rho, x):
    chart = make_chart(kind, T)
    back = to_chart(from_chart(ChartPoint(chart, rho, x)), chart)
    assert abs(back.rho - rho) <= 1e-12 * rho
    assert abs(back.x - x) <= 1e-12 * x


@settings(max_examples=100, deadline=None)
@given(charts, unit, unit, coef, coef, coef, coef, st.floats(0.1, 4.0))
def test_symbol_homogeneous(kind, rho, x, zeta, xi, e1, e2, t):
    c = make_chart(kind)
    a = symbol(c, rho, x, [0.1, 0.2], zeta, xi, [e1, e2])
    b = symbol(c, rho, x, [0.1, 0.2], t * zeta, t * xi, [t * e1, t * e2])
    assert np.isclose(b, t * t * a, rtol=1e-10, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(charts, unit, unit, coef, coef, coef, coef)
def test_field_annihilates_symbol(kind, rho, x, zeta, xi, e1, e2):
    c = make_chart(kind)
    y = np.array([0.1, -0.2])
    p = PhasePoint(ChartPoint(c, rho, x, y), xi, np.array([e1, e2]), zeta)
    H = hamiltonian_field(M, p)
    # frame order: rho d_rho, x d_x, x d_y, d_xi, d_eta, d_zeta
    d = np.array([H[0] * rho, H[1] * x, *(x * H[2:4]), H[4], *H[5:7], H[7]])
    scale = 1e-6 / max(1.0, np.max(np.abs(d)))

    def at(s):
        z = s * scale * d
        return symbol(c, rho + z[0], x + z[1], y + z[2:4], zeta + z[7], xi + z[4], [e1 + z[5], e2 + z[6]])

    deriv = (at(1.0) - at(-1.0)) / (2 * scale)
    size = 1.0 + zeta * zeta + xi * xi + e1 * e1 + e2 * e2
    assert abs(deriv) <= 1e-7 * size * max(1.0, np.max(np.abs(d)))


@settings(max_examples=150, deadline=None)
@given(charts, st.floats(0.05, 0.5), st.floats(0.3, 1.5), st.floats(0.05, 0.95), st.floats(0.0, 0.3))
def test_symbol_conserved_along_flow(kind, rho, zeta, frac, s):
    c = make_chart(kind)
    # a point of the characteristic set with xi between the two roots
    xi = 2 * zeta * (1 + frac) if kind == "NearI0" else 2 * zeta * frac
    e2 = c.sign * (0.5 * xi * xi - xi * zeta)
    r, z, x, e = closed_form_flow(c, (rho, zeta, xi, np.array([np.sqrt(e2), 0.0])), s)
    assert abs(symbol(c, r, 0.0, [0.0, 0.0], z, x, e)) <= 1e-10 * (z * z + x * x + e @ e)


@settings(max_examples=200, deadline=None)
@given(coef, coef, coef, coef)
def test_duality_involution(a0, aI, ap, p1):
    assert np.allclose(dual_weights(*dual_weights(a0, aI, ap, p1)), (a0, aI, ap, p1), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-10, 10), st.floats(0.5, 3.0), st.floats(-1, 1))
def test_mellin_round_trip(gamma, centre, width, amp):
    pair = mellin_grid(-40, 40, 4096, gamma=gamma)
    s = np.log(pair.rho)
    u = amp * pair.rho ** gamma * np.exp(-(s - centre) ** 2 / (2 * width ** 2))
    back = mellin_transform(mellin_transform(u, pair), pair, "Inverse")
    assert np.max(np.abs(back - u) * pair.rho ** -gamma) < 1e-8


GRID = grid_for(ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0)), h=0.1, u1=1.0)


def forcing(a, t0, r0, ell):
    return ForcingSpec(a, (t0, t0 + 0.5), (r0, r0 + 0.3), ell=ell)


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.0, 0.4), st.floats(2.5, 2.7), st.integers(0, 2))
def test_solver_linear(a, b, t0, r0, ell):
    f1, f2 = forcing(1.0, t0, r0, ell), forcing(1.0, 0.1, 2.6, ell)
    u1 = solve_spherical_forward(3, f1, GRID).w[ell]
    u2 = solve_spherical_forward(3, f2, GRID).w[ell]
    both = solve_spherical_forward(3, [f1.scaled(a), f2.scaled(b)], GRID).w[ell]
    assert np.max(np.abs(both - (a * u1 + b * u2))) <= 1e-10 * max(np.max(np.abs(both)), 1.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 0.4), st.floats(2.5, 2.7), st.integers(0, 2))
def test_solver_forward_support(t0, r0, ell):
    s = solve_spherical_forward(3, forcing(1.0, t0, r0, ell), GRID)
    assert np.all(s.field(ell)[s.time() < t0 - 1e-12] == 0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.3, 0.3))
def test_weight_shift(d0, dI):
    sol = solve_spherical_forward(3, ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0)), GRID)
    a = weighted_norm(with_weight(sol, d0, dI), NormSpec(0, -1.0, -0.6)).value
    b = weighted_norm(sol, NormSpec(0, -1.0 - d0, -0.6 - dI)).value
    assert np.isclose(a, b, rtol=1e-10)
