import numpy as np
import pytest

from nullinf.errors import CFLViolation, GridTooCoarse, InsufficientRange, QuadratureError, UnsupportedMode
from nullinf.wavesolver import (ForcingSpec, NormSpec, convergence_study, dalembert_oracle,
                                decay_fit, discrete_residual, grid_for, make_grid, oracle_refinement,
                                power_fit, sharpness_scan, slice_energy, solve_spherical_forward,
                                weighted_norm, with_weight)

F0 = ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0))


@pytest.fixture(scope="module")
def grid():
    return grid_for(F0, h=0.05, u1=2.0)


@pytest.fixture(scope="module")
def sol(grid):
    return solve_spherical_forward(3, F0, grid)


def test_zero_forcing(grid):
    s = solve_spherical_forward(3, F0.scaled(0.0), grid)
    assert np.all(s.w[0] == 0.0)


def test_matches_oracle(sol, grid):
    rng = np.random.default_rng(8)
    i = rng.integers(1, grid.nu, 12)
    j = np.minimum(i + rng.integers(1, 300, 12), grid.v.size - 1)
    ref = dalembert_oracle(F0, grid.u[i], grid.v[j])
    got = sol.field(0)[i, j]
    assert np.max(np.abs(got - ref)) < 1e-6


def test_linearity(grid):
    f1 = ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0), ell=1)
    f2 = ForcingSpec(0.7, (0.2, 0.9), (2.6, 3.0), order=2, ell=1)
    a = solve_spherical_forward(3, f1, grid).w[1]
    b = solve_spherical_forward(3, f2, grid).w[1]
    both = solve_spherical_forward(3, [f1, f2.scaled(2.0)], grid).w[1]
    assert np.max(np.abs(both - (a + 2 * b))) <= 1e-10 * max(np.max(np.abs(both)), 1.0)


def test_residual(sol):
    assert discrete_residual(sol, F0) < 1e-6


def test_forward_support(sol, grid):
    before = sol.time() < F0.t_range[0] - 1e-12
    assert np.all(sol.field(0)[before] == 0.0)


def test_backends_agree(grid):
    f = ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0), ell=2)
    a = solve_spherical_forward(3, f, grid, backend="numba").w[2]
    b = solve_spherical_forward(3, f, grid, backend="numpy").w[2]
    assert np.array_equal(a, b)


def test_oracle_outside_causal_future():
    # u_ret beyond the forcing's last advanced ray is unreachable for v below the support
    assert dalembert_oracle(F0, [-10.0], [-2.0])[0] == 0.0


def test_oracle_radiation_field():
    v = np.array([2e2, 1e3, 5e3])
    u = np.full(3, 1.0)
    r = 0.5 * (v - u)
    ru = r * dalembert_oracle(F0, u, v)
    assert np.ptp(ru) < 1e-10 * np.max(np.abs(ru))


def test_oracle_refinement():
    assert oracle_refinement(F0, [-1.0, 0.5], [5.0, 30.0]) < 1e-8


def test_oracle_only_ell_zero():
    with pytest.raises(QuadratureError):
        dalembert_oracle(ForcingSpec(ell=1), [0.0], [1.0])


def test_energy_constant(sol, grid):
    E = [slice_energy(sol, 0, t) for t in (1.5, 1.75, 2.0)]
    assert np.ptp(E) <= 1e-6 * E[0]


def test_second_order():
    f = ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0), ell=2)
    g = grid_for(f, h=0.1, u1=1.0, v_max=200.0)
    slopes = convergence_study(3, f, g, levels=4)["slopes"]
    assert all(abs(s - 2.0) < 0.2 for s in slopes)


def test_errors():
    with pytest.raises(UnsupportedMode):
        ForcingSpec(ell=9)
    with pytest.raises(UnsupportedMode):
        solve_spherical_forward(4, F0, make_grid())
    with pytest.raises(CFLViolation):
        solve_spherical_forward(3, F0, make_grid(u0=-1.0))


def test_norm_zero(grid):
    z = solve_spherical_forward(3, F0.scaled(0.0), grid)
    assert weighted_norm(z, NormSpec(0, -1.0, -0.6)).value == 0.0


def test_weight_shift_identity(sol):
    a = weighted_norm(with_weight(sol, 0.3, 0.1), NormSpec(0, -1.0, -0.6)).value
    b = weighted_norm(sol, NormSpec(0, -1.3, -0.7)).value
    assert a == pytest.approx(b, rel=1e-10)


def test_norm_monotone_in_weights(sol):
    # rho0, x_I <= 1 on the exterior region and the weight is rho0^-a0 x_I^-2aI,
    # so raising an exponent can only increase each partial integral
    vals = [weighted_norm(sol, NormSpec(0, -1.0, aI), levels=5).partials[-1]
            for aI in (-0.9, -0.8, -0.7)]
    assert vals[0] <= vals[1] <= vals[2]
    vals = [weighted_norm(sol, NormSpec(0, a0, -0.8), levels=5).partials[-1]
            for a0 in (-1.5, -1.0, -0.5)]
    assert vals[0] <= vals[1] <= vals[2]


def test_norm_order_limit():
    with pytest.raises(GridTooCoarse):
        NormSpec(s=2, k=1)


def test_power_fit_synthetic():
    r = np.geomspace(1.0, 1e4, 50)
    fit = power_fit(r, 1.0 / r)
    assert fit.exponent == pytest.approx(-1.0, abs=1e-3)
    with pytest.raises(InsufficientRange):
        power_fit(r[:10], 1.0 / r[:10])


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_outgoing_decay(grid, ell):
    f = ForcingSpec(1.0, (0.0, 1.0), (2.5, 3.0), ell=ell)
    s = solve_spherical_forward(3, f, grid)
    assert decay_fit(s, "OutgoingRay", -2.0).exponent == pytest.approx(-1.0, abs=0.05)


def test_model_p1_decay(grid):
    s = solve_spherical_forward(3, F0, grid, "ModelP1", 0.5)
    assert decay_fit(s, "TowardIplus", -2.0).exponent == pytest.approx(3.0, abs=0.1)


def test_interior_curve_outside_domain_of_influence(sol):
    # t = r/2 at large r lies before the forcing's first retarded time: u = 0 there
    with pytest.raises(InsufficientRange):
        decay_fit(sol, "Interior", 0.5, r_range=(10.0, 1e4))


def test_sharpness(sol):
    assert weighted_norm(sol, NormSpec(0, -1.0, -0.6)).finite
    assert weighted_norm(sol, NormSpec(0, -1.0, -0.4)).divergent
    lo, hi = sharpness_scan(sol, np.arange(-0.8, -0.19, 0.05))["bracket"]
    assert hi - lo <= 0.1 + 1e-12
    assert lo - 0.05 <= -0.5 <= hi + 0.05


@pytest.mark.parametrize("k", [1, 2])
def test_b_regularity(sol, k):
    assert weighted_norm(sol, NormSpec(0, -1.0, -0.6)).finite
    assert weighted_norm(sol, NormSpec(0, -1.0, -0.6, k=k)).finite
