import numpy as np
import pytest

from nullinf.errors import DomainError, FitError
from nullinf.geometry import (ChartPoint, MetricSpec, SpacetimePoint, dual_metric_eb,
                              eb_frame_in_spacetime, fit_admissibility_orders, from_chart,
                              minkowski, near_i0, near_iplus, quadratic_form, signature,
                              spacetime_in_coordinates, spacetime_in_frame, to_chart, transition,
                              varrho_ratio)


def test_to_chart_near_i0():
    # t* = -1, T = 1: rho = 1/2, x = sqrt(2/4)
    c = to_chart(SpacetimePoint(3.0, 4.0), near_i0(1.0))
    assert c.rho == pytest.approx(0.5, abs=1e-15)
    assert c.x == pytest.approx(np.sqrt(2) / 2, abs=1e-15)


def test_to_chart_outside_iplus():
    with pytest.raises(DomainError):
        to_chart(SpacetimePoint(9.0, 4.0), near_iplus(1.0))


def test_to_chart_wrong_side():
    with pytest.raises(DomainError):
        to_chart(SpacetimePoint(10.0, 4.0), near_i0(1.0))


def test_from_chart_inverse():
    p = from_chart(ChartPoint(near_i0(1.0), 0.5, np.sqrt(2) / 2))
    assert p.tstar == pytest.approx(-1.0, abs=1e-14)
    assert p.r == pytest.approx(4.0, rel=1e-14)


def test_from_chart_boundary():
    with pytest.raises(DomainError):
        from_chart(ChartPoint(near_i0(), 0.0, 0.3))


def test_round_trip_random():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        chart = near_i0(rng.uniform(-2, 2)) if rng.random() < 0.5 else near_iplus(rng.uniform(-2, 2))
        c = ChartPoint(chart, rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99), rng.normal(size=2))
        p = from_chart(c)
        back = to_chart(p, chart)
        assert abs(back.rho - c.rho) <= 1e-12 * c.rho
        assert abs(back.x - c.x) <= 1e-12 * c.x


def test_overlap_transition():
    c = ChartPoint(near_i0(0.0), 0.5, 0.05)
    d = transition(c, near_iplus(-5.0))
    direct = to_chart(from_chart(c), near_iplus(-5.0))
    assert d.rho == pytest.approx(direct.rho, rel=1e-12)
    p, q = from_chart(c), from_chart(d)
    assert q.t == pytest.approx(p.t, rel=1e-12)


def test_partial_t_star_near_i0():
    c = ChartPoint(near_i0(), 0.2, 0.3)
    row = spacetime_in_frame(c)[0]
    assert np.allclose(row[:2], [0.2, -0.1], atol=1e-12)
    assert np.allclose(row[2:], 0.0)


def test_partial_r_near_iplus():
    c = ChartPoint(near_iplus(), 0.2, 0.3)
    A = spacetime_in_coordinates(c)
    assert A[1, 1] == pytest.approx(-0.0027, abs=1e-15)
    assert A[1, 0] == pytest.approx(0.0, abs=1e-15)


def test_frame_invertible():
    F, cond = eb_frame_in_spacetime(ChartPoint(near_iplus(), 0.4, 0.6))
    assert abs(np.linalg.det(F)) > 0
    assert np.isfinite(cond)


def test_dual_form_near_i0_at_scri():
    G = dual_metric_eb(minkowski(), ChartPoint(near_i0(), 0.3, 0.0))
    assert quadratic_form(G, 1.0, 2.0, [0, 0]) == 0.0
    # -1/2 xi (xi - 2 zeta) + |eta|^2
    assert quadratic_form(G, 0.7, 1.3, [0.2, -0.4]) == pytest.approx(-0.5 * 1.3 * (1.3 - 1.4) + 0.2)


def test_dual_form_near_iplus_at_scri():
    G = dual_metric_eb(minkowski(), ChartPoint(near_iplus(), 0.3, 0.0))
    assert quadratic_form(G, 1.0, 0.0, [0, 0]) == 0.0
    assert quadratic_form(G, 0.7, 1.3, [0.2, -0.4]) == pytest.approx(0.5 * 1.3 * (1.3 - 1.4) + 0.2)


def test_schwarzschild_lorentzian():
    m = MetricSpec("Schwarzschild", m=1.0)
    rng = np.random.default_rng(2)
    for _ in range(100):
        chart = near_i0() if rng.random() < 0.5 else near_iplus()
        c = ChartPoint(chart, rng.uniform(0.01, 0.95), rng.uniform(0.01, 0.95), rng.normal(size=2))
        assert signature(dual_metric_eb(m, c)) == (1, 3)


def test_spacelike_level_sets_of_x():
    m = minkowski()
    for d in (1e-3, 1e-2, 0.1):
        G = dual_metric_eb(m, ChartPoint(near_i0(), 0.5, d))
        assert quadratic_form(G, 0.0, 1.0, [0, 0]) < 0


def test_varrho_ratio_bounded():
    for chart in (near_i0(), near_iplus()):
        for rho in np.geomspace(1e-6, 0.9, 12):
            for x in np.geomspace(1e-6, 0.9, 12):
                q = varrho_ratio(ChartPoint(chart, rho, x))
                assert 0.1 < q < 10


def test_fit_minkowski_exact():
    rep = fit_admissibility_orders(minkowski(), near_i0())
    assert all(v == "exact" for path in rep["paths"].values() for v in path.values())


def test_fit_schwarzschild():
    rep = fit_admissibility_orders(MetricSpec("Schwarzschild", m=1.0), near_iplus())
    assert rep["paths"]["x"][(0, 1)] == pytest.approx(2.0, abs=0.1)


def test_fit_synthetic_perturbation():
    m = MetricSpec("Perturbation", perturbation={(0, 1): "x**0.5 * bump(rho, 0.2, 0.8)"})
    rep = fit_admissibility_orders(m, near_i0())
    assert rep["paths"]["x"][(0, 1)] == pytest.approx(0.5, abs=0.05)


def test_fit_needs_samples():
    with pytest.raises(FitError):
        fit_admissibility_orders(minkowski(), near_i0(), per_decade=3)


def test_decay_orders_validated():
    with pytest.raises(ValueError):
        MetricSpec("Minkowski", orders=(1.0, 0.7, 1.0))
