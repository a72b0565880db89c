import numpy as np
import pytest

from nullinf.errors import NotCritical, ToleranceAmbiguous
from nullinf.geometry import ChartPoint, MetricSpec, dual_metric_eb, minkowski, near_i0, near_iplus, quadratic_form
from nullinf.hamiltonian import (XI_LARGE, ZETA_LARGE, CompactPhasePoint, PhasePoint,
                                 characteristic_component, compactify, decompactify,
                                 hamiltonian_field, linearize_at_point, rescaled_field,
                                 split_field, symbol_value)

M = minkowski()


def pp(chart, xi, zeta, eta=(0.0, 0.0), rho=0.3, x=0.0):
    return PhasePoint(ChartPoint(chart, rho, x), xi, np.array(eta, float), zeta)


def test_symbol_examples():
    assert symbol_value(M, pp(near_i0(), 2.0, 1.0)) == 0.0
    assert symbol_value(M, pp(near_i0(), np.sqrt(2), 0.0, (1.0, 0.0))) == pytest.approx(0.0, abs=1e-15)
    assert symbol_value(M, pp(near_iplus(), 1.0, 1.0)) == -0.5


def test_characteristic_components():
    assert characteristic_component(M, pp(near_i0(), 2.0, 1.0)) == "SigmaPlus"
    assert characteristic_component(M, pp(near_iplus(), 2.0, 1.0)) == "SigmaPlus"
    assert characteristic_component(M, pp(near_i0(), 1.0, 1.0)) == "OffCharacteristic"
    with pytest.raises(ToleranceAmbiguous):
        characteristic_component(M, pp(near_i0(), 0.0, 0.0, (1e-6, 0.0)))


def test_field_near_i0_on_w_in():
    H = hamiltonian_field(M, pp(near_i0(), 2.0, 1.0))
    base, fib = split_field(H)
    assert base[0] == 2.0       # rho d_rho
    assert base[1] == -1.0      # x d_x
    assert fib[1] == 0.0        # d_xi
    # eta d_eta coefficient: d_eta component / eta at a nearby eta
    H2 = hamiltonian_field(M, pp(near_i0(), 2.0, 1.0, (1e-4, 0.0)))
    assert split_field(H2)[1][2] / 1e-4 == pytest.approx(-1.0, rel=1e-6)


def test_field_vanishes_on_r_out_as_vector():
    p = pp(near_iplus(), 0.0, 1.0)
    H = hamiltonian_field(M, p)
    base, fib = split_field(H)
    # frame coefficients times (rho, x, x) are coordinate components
    coords = base * np.array([p.base.rho, p.base.x, p.base.x, p.base.x])
    assert np.all(coords == 0.0)
    assert np.all(fib == 0.0)


def test_fd_matches_exact():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        chart = near_i0() if rng.random() < 0.5 else near_iplus()
        p = PhasePoint(ChartPoint(chart, rng.uniform(0.05, 0.9), rng.uniform(0.0, 0.9), rng.normal(size=2)),
                       rng.normal(), rng.normal(size=2), rng.normal())
        a = hamiltonian_field(M, p, "exact")
        b = hamiltonian_field(M, p, "fd")
        worst = max(worst, np.max(np.abs(a - b)))
    assert worst < 1e-7


def test_symbol_matches_dual_form():
    c = ChartPoint(near_iplus(), 0.4, 0.2, [0.3, -0.1])
    p = PhasePoint(c, 0.7, [0.5, 0.2], -1.1)
    G = dual_metric_eb(M, c)
    assert symbol_value(M, p) == quadratic_form(G, -1.1, 0.7, [0.5, 0.2])


def test_rescaled_zero_at_r_in_minus():
    c = CompactPhasePoint(ChartPoint(near_i0(), 0.0, 0.0), ZETA_LARGE, 0.0, 2.0, [0.0, 0.0])
    assert np.max(np.abs(rescaled_field(M, c))) < 1e-14


def test_rescaled_zero_at_r_c():
    c = CompactPhasePoint(ChartPoint(near_i0(), 0.0, 0.0), XI_LARGE, 0.0, 0.0, [1 / np.sqrt(2), 0.0])
    assert np.max(np.abs(rescaled_field(M, c))) < 1e-14


def test_rescaled_nonzero_elsewhere():
    c = CompactPhasePoint(ChartPoint(near_i0(), 0.0, 0.0), ZETA_LARGE, 0.0, 3.0, [np.sqrt(1.5), 0.0])
    assert np.linalg.norm(rescaled_field(M, c)) > 0.1


def test_linearize_r_in_minus():
    c = CompactPhasePoint(ChartPoint(near_i0(), 0.0, 0.0), ZETA_LARGE, 0.0, 2.0, [0.0, 0.0])
    lin = linearize_at_point(M, c, "RinMinus")
    assert np.allclose(lin["blocks"]["RinMinus"]["diag"], [2, -1, -1, -1], atol=1e-8)
    names = lin["names"]
    J = lin["jacobian"]
    for nm in ("rho_inf", "xi_hat", "y0", "y1"):
        i = names.index(nm)
        assert abs(J[i, i]) < 1e-8


def test_linearize_r_c():
    c = CompactPhasePoint(ChartPoint(near_i0(), 0.0, 0.0), XI_LARGE, 0.0, 0.0, [1 / np.sqrt(2), 0.0])
    blk = linearize_at_point(M, c, "Rc")["blocks"]["Rc"]
    assert np.allclose(blk["diag"], [1, 1, -1, 1], atol=1e-8)
    assert blk["tag"] == "saddle"


def test_not_critical():
    c = CompactPhasePoint(ChartPoint(near_i0(), 0.0, 0.0), ZETA_LARGE, 0.0, 3.0, [np.sqrt(1.5), 0.0])
    with pytest.raises(NotCritical):
        linearize_at_point(M, c)


def test_compactify_round_trip():
    p = pp(near_iplus(), 0.4, -1.3, (0.2, 0.5))
    q = decompactify(compactify(p))
    assert np.allclose(q.covector, p.covector, rtol=1e-14)


def test_schwarzschild_field_fd():
    m = MetricSpec("Schwarzschild", m=1.0)
    p = PhasePoint(ChartPoint(near_iplus(), 0.3, 0.2), 0.5, [0.1, 0.2], 1.0)
    H = hamiltonian_field(m, p)
    assert np.all(np.isfinite(H))
