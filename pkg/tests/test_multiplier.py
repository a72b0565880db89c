import numpy as np
import pytest

from nullinf.errors import UnknownTheoremTag
from nullinf.geometry import ChartPoint, minkowski, near_i0, near_iplus
from nullinf.multiplier import (DUAL_TAGS, FUTURE_TIMELIKE, NULL, MultiplierField,
                                analytic_threshold, causal_character, deformation_tensor,
                                dual_report, dual_weights, g_ww, k_tilde_symbolic, minor_trace_det,
                                pi_tensor, positivity_boundary, positivity_scan, richardson_minor,
                                threshold_evaluate, w_vector)
from nullinf.geometry import metric_eb

M = minkowski()
SCRI0 = ChartPoint(near_i0(), 0.3, 0.0)


def test_w_future_timelike():
    assert causal_character(M, w_vector(0.1), SCRI0) == FUTURE_TIMELIKE
    W = w_vector(0.1)
    assert W @ metric_eb(M, SCRI0) @ W == pytest.approx(-0.38, abs=1e-14)


def test_w_null_at_c_zero():
    assert causal_character(M, w_vector(0.0), SCRI0) == NULL


def test_minus_x_dx_is_future_null():
    # the declared generator -x d_x is null at null infinity, and future directed
    v = np.array([0.0, -1.0, 0.0, 0.0])
    assert causal_character(M, v, SCRI0, detail=True) == (NULL, True)


@pytest.mark.parametrize("c", [0.05, 0.5, 1.0, 1.7])
def test_g_ww_identity(c):
    for chart in (near_i0(), near_iplus()):
        W = w_vector(c, chart.kind)
        val = W @ metric_eb(M, ChartPoint(chart, 0.4, 0.0)) @ W
        assert val == pytest.approx(g_ww(c, chart.kind), abs=1e-13)


def test_k_tilde_leading_entry():
    mult = MultiplierField(1.0, -0.25, c=0.01)
    K = deformation_tensor(M, mult, SCRI0, p1=0.0)
    assert K[0, 0] == pytest.approx(1.99, abs=1e-13)


def test_minor_trace_limit():
    r = richardson_minor(1.0, -0.25, 0.0)
    assert r["trace0"] == pytest.approx(2.5, abs=1e-10)


def test_det_slope():
    r = richardson_minor(1.0, -0.25, 0.0)
    assert r["det_slope"] == pytest.approx(2.5, rel=1e-8)
    K = k_tilde_symbolic(MultiplierField(1.0, -0.25, c=0.01), 0.0)
    assert minor_trace_det(K)[1] == pytest.approx(0.025, rel=0.05)


@pytest.mark.parametrize("a0,aI,lam", [(1.0, 0.3, 0.3), (0.4, 0.4, -0.2)])
def test_det_slope_degenerate(a0, aI, lam):
    assert abs(richardson_minor(a0, aI, lam)["det_slope"]) < 1e-8


def test_fd_matches_symbolic():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        chart = near_i0() if rng.random() < 0.5 else near_iplus()
        mult = MultiplierField(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(0.05, 1.5), chart)
        p = ChartPoint(chart, rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.normal(size=2) * 0.3)
        lam = rng.uniform(-0.5, 0.5)
        a = deformation_tensor(M, mult, p, lam, "symbolic")
        b = deformation_tensor(M, mult, p, lam, "fd")
        worst = max(worst, np.max(np.abs(a - b)))
    assert worst < 1e-6


def test_symmetry():
    mult = MultiplierField(0.3, -0.2, 0.1, 0.4, near_i0())
    K = deformation_tensor(M, mult, ChartPoint(near_i0(), 0.5, 0.3), 0.2, "fd")
    assert np.max(np.abs(K - K.T)) < 1e-12
    P = pi_tensor(M, mult, ChartPoint(near_i0(), 0.5, 0.3))
    assert np.max(np.abs(P - P.T)) < 1e-12


def test_positivity_examples():
    assert positivity_scan(0.0, -0.75)["definite"]
    assert positivity_scan(0.0, -0.75, cs=np.linspace(1e-3, 0.2, 50))["definite"]
    assert not positivity_scan(0.0, -0.4)["definite"]
    assert not positivity_scan(-2.0, -0.75)["definite"]


@pytest.mark.parametrize("a0,p1", [(0.0, 0.0), (-1.5, 0.0), (0.0, 0.3)])
def test_positivity_boundary(a0, p1):
    assert positivity_boundary(a0, p1) == pytest.approx(analytic_threshold(a0, p1), abs=1e-3)


def test_threshold_global_pass():
    rep = threshold_evaluate("ThmGlobal", s=1, alpha0=0.0, alphaI=-0.75, alphaPlus=-1.5)
    assert rep.all_pass


def test_threshold_exterior_fail():
    rep = threshold_evaluate("ThmExterior", alpha0=0.0, alphaI=-0.4)
    assert rep.failures() == ["αI < −1/2"]


def test_threshold_unknown_tag():
    with pytest.raises(UnknownTheoremTag):
        threshold_evaluate("ThmNope")


def test_threshold_normal_op_window():
    assert threshold_evaluate("ThmNpB", lam=0.3 - 0.2j, gammaI=0.5).all_pass
    assert not threshold_evaluate("ThmNpB", lam=0.3 - 0.2j, gammaI=0.1).all_pass


def test_dual_weights_involution():
    w = (0.7, -0.3, -0.8, -1.9)
    assert np.allclose(dual_weights(*dual_weights(*w)), w)


@pytest.mark.parametrize("tag", sorted(DUAL_TAGS))
def test_duality_passes(tag):
    rng = np.random.default_rng(7)
    for _ in range(200):
        s = float(rng.integers(0, 4))
        a0, aI, ap = rng.uniform(-3, 2, 3)
        p1 = rng.uniform(-0.5, 0.5)
        fw = threshold_evaluate(tag, s, alpha0=a0, alphaI=aI, alphaPlus=ap, p1bar=p1)
        bw = dual_report(tag, s, a0, aI, ap, p1)
        assert fw.all_pass == bw.all_pass
