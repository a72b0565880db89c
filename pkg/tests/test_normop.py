import numpy as np
import pytest
from scipy import integrate

from nullinf.errors import AliasError, ThresholdViolation
from nullinf.normop import (CollocationGrid, ReducedNormalOp, apply_reduced, boundary_spectrum,
                            conjugation_residual, gamma_check, injectivity_identity, line_norm_sq,
                            mellin_grid, mellin_transform, semiclassical_field,
                            semiclassical_radial_points, shooting_exponents,
                            smallest_singular_value, solve_reduced, solve_simplified)

OP = ReducedNormalOp(0.3 - 0.2j, q1=1.0)


def ustar(x):
    return x ** 2 * np.exp(-x ** 2 / 2)


def dustar(x):
    return (2 * x - x ** 3) * np.exp(-x ** 2 / 2)


def d2ustar(x):
    return (2 - 5 * x ** 2 + x ** 4) * np.exp(-x ** 2 / 2)


def test_q1_default():
    assert ReducedNormalOp(0.5, n=3).q1 == 1.0
    assert ReducedNormalOp(0.5, n=3, p1plus=0.25).q1 == 1.25


def test_boundary_spectrum_example():
    sp = boundary_spectrum(ReducedNormalOp(0.5, q1=1.0))
    assert sorted(sp["zeta"], key=lambda z: z.imag) == [-2j, 1.0]
    assert sorted(sp["exponents"], key=lambda z: z.real) == [1j, 2.0]
    assert not sp["double"]


def test_boundary_spectrum_double():
    assert boundary_spectrum(ReducedNormalOp(-1j, q1=1.0))["double"]


def test_general_p0_roots():
    op = ReducedNormalOp(0.4 - 0.1j, q1=1.0, p0=0.3)
    for z in boundary_spectrum(op)["zeta"]:
        assert abs(op.symbol(z)) < 1e-12


@pytest.mark.parametrize("lam", [0.5, 0.3 - 0.2j, -0.7 + 0.4j])
def test_shooting_exponents(lam):
    op = ReducedNormalOp(lam, q1=1.0)
    got = shooting_exponents(op)
    for e in boundary_spectrum(op)["exponents"]:
        assert min(abs(g - e) for g in got) < 1e-4


def test_lambda_tilde():
    assert ReducedNormalOp(0.5, q1=1.0).lam_tilde == 0.5 + 1j


def test_zero_forcing_and_sigma():
    x, u, info = solve_reduced(OP, lambda x: 0 * x, 0.5)
    assert np.all(u == 0)
    assert info["sigma_min"] > 0.01
    assert smallest_singular_value(OP, 0.5) > 0.01


def test_manufactured():
    x, u, info = solve_reduced(OP, lambda x: apply_reduced(OP, ustar(x), dustar(x), d2ustar(x), x), 0.5)
    assert np.max(np.abs(u - ustar(x))) < 1e-7
    assert info["residual"] < 1e-8


def test_window_enforced():
    with pytest.raises(ThresholdViolation):
        solve_reduced(OP, lambda x: 0 * x, 1.2)
    with pytest.raises(ThresholdViolation):
        smallest_singular_value(OP, 0.1)


def test_degeneration_toward_endpoints():
    lo, hi = OP.window()
    g = np.linspace(lo, hi, 12)[1:-1]
    s = [smallest_singular_value(OP, gi, CollocationGrid(N=200)) for gi in g]
    k = int(np.argmax(s))
    assert 0 < k < len(s) - 1
    assert np.all(np.diff(s[:k + 1]) > 0) and np.all(np.diff(s[k:]) < 0)


def test_conjugation_residual():
    op = ReducedNormalOp(0.5, q1=1.0)
    x, w, _ = solve_simplified(op.lam_tilde)
    u = x ** (op.q1 + 1j * op.lam) * w
    res, simple = conjugation_residual(op, x, u)
    assert res < 1e-7
    assert simple < 1e-7


def test_conjugation_needs_p0_zero():
    with pytest.raises(ValueError):
        conjugation_residual(ReducedNormalOp(0.5, q1=1.0, p0=0.2), np.ones(3), np.ones(3))


def test_injectivity_identity():
    lt = 0.5 + 1j
    ut = lambda x: x ** 1.5 * np.exp(-x ** 2)
    dut = lambda x: (1.5 * x ** 0.5 - 2 * x ** 2.5) * np.exp(-x ** 2)
    d2ut = lambda x: (0.75 * x ** -0.5 - 5 * x ** 1.5 - 2 * x * (1.5 * x ** 0.5 - 2 * x ** 2.5)) * np.exp(-x ** 2)
    lhs, rhs = injectivity_identity(lt, ut, dut, d2ut)
    assert lhs == pytest.approx(rhs, abs=1e-6)


def test_mellin_round_trip_bump():
    pair = mellin_grid(gamma=0.0)
    s = np.log(pair.rho)
    u = np.exp(-(s + 5) ** 2)
    back = mellin_transform(mellin_transform(u, pair), pair, "Inverse")
    assert np.max(np.abs(back - u)) < 1e-8


def test_mellin_alias_error():
    pair = mellin_grid(gamma=0.0)
    with pytest.raises(AliasError):
        mellin_transform(np.ones(pair.rho.size), pair)


def test_plancherel_single():
    pair = mellin_grid(-40, 40, 4096, gamma=1.0)
    s = np.log(pair.rho)
    u = pair.rho * np.exp(-(s - 1) ** 2 / 2)
    F = mellin_transform(u, pair)
    exact = integrate.quad(lambda t: np.exp(-(t - 1) ** 2), -40, 40, epsrel=1e-13)[0]
    assert line_norm_sq(F, pair) == pytest.approx(exact, rel=1e-8)


def test_gamma_function():
    got, ex = gamma_check(np.array([0.5 + 0.5j, 1 + 1j, -2 + 0.3j]))
    assert np.max(np.abs(got - ex) / np.abs(ex)) < 1e-8


@pytest.mark.parametrize("sign", [1, -1])
def test_semiclassical_points(sign):
    y = np.zeros(2)
    assert np.all(semiclassical_field(0.0, y, 2.0 * sign, np.zeros(2), sign) == 0)
    assert np.all(semiclassical_field(0.0, y, 0.0, np.zeros(2), sign) == 0)
    out = semiclassical_radial_points(sign)
    assert max(out["field_norms"].values()) == 0.0
    if sign == 1:
        assert np.all(out["eigs"]["in"] > 0) and np.all(out["eigs"]["out"] < 0)
    assert out["min_off_norm"] > 1e-3
