"""Transport-with-reaction metric: elliptic solve and path distance."""

import numpy as np
import pytest

from gcflow import problems, thermo
from gcflow.kernels import make_smoothed_indicator
from gcflow.metric import (
    approx_distance,
    metric_axiom_checks,
    path_distance_upper,
    solve_driving_potential,
)
from gcflow.spectral import Grid, RealField, gradient, l2_norm
from gcflow.thermo import make_params, omega, rate_constants


@pytest.fixture
def params():
    grid = Grid.make(1, 1.0, 64)
    kernel = make_smoothed_indicator(grid, 1.0, 0.1, 0.02)
    return make_params(grid, kernel, 0.4, m0=0.05)


@pytest.fixture
def params32():
    grid = Grid.make(1, 1.0, 32)
    kernel = make_smoothed_indicator(grid, 1.0, 0.1, 0.04)
    return make_params(grid, kernel, 0.4, m0=0.05)


def dense_operator(n, params):
    """Dense matrix of q -> div(N grad q) - Omega q built column by column."""
    grid = params.grid
    om = omega(n, params).values
    m = grid.M
    A = np.zeros((m, m))
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1.0
        q = RealField(grid, e)
        flux = RealField(grid, n.values * gradient(q)[0].values)
        from gcflow.spectral import divergence

        A[:, j] = divergence((flux,)).values - om * e
    return A


def test_zero_target_gives_zero(params):
    n = problems.random_band_state(params, 3, 0.3, seed=51).n
    zero = RealField(params.grid, np.zeros(params.grid.shape))
    q, rep = solve_driving_potential(n, zero, params)
    assert np.max(np.abs(q.values)) == 0.0
    assert rep.iterations == 0


def test_solve_matches_dense_oracle(params32):
    # M = 32: invert the dense matrix directly and compare
    grid = params32.grid
    n = problems.random_band_state(params32, 3, 0.3, seed=52).n
    rng = np.random.default_rng(53)
    target = RealField(grid, rng.standard_normal(grid.shape))
    q, rep = solve_driving_potential(n, target, params32, tol=1e-13)
    A = dense_operator(n, params32)
    q_dense = np.linalg.solve(A, target.values)
    assert np.max(np.abs(q.values - q_dense)) < 1e-8
    assert rep.relative_residual < 1e-10


def test_uniform_density_diagonal_oracle(params):
    # at N = m0 the operator is diagonal in Fourier:
    # target eps cos(kx) gives Q = -eps cos(kx) / (m0 k^2 + sqrt(m0))
    grid = params.grid
    x = grid.points()[0]
    eps, mode = 1e-3, 4
    k = 2 * np.pi * mode
    n = RealField(grid, np.full(grid.shape, params.m0))
    target = RealField(grid, eps * np.cos(k * x))
    q, _ = solve_driving_potential(n, target, params, tol=1e-13)
    expect = -eps * np.cos(k * x) / (params.m0 * k**2 + np.sqrt(params.m0))
    assert np.max(np.abs(q.values - expect)) < 1e-12


def test_linear_scaling(params):
    # Q is linear in the target; distance scales linearly in the rate
    grid = params.grid
    n = problems.random_band_state(params, 3, 0.3, seed=54).n
    rng = np.random.default_rng(55)
    target = RealField(grid, rng.standard_normal(grid.shape))
    q1, _ = solve_driving_potential(n, target, params, tol=1e-13)
    target3 = RealField(grid, 3.0 * target.values)
    q3, _ = solve_driving_potential(n, target3, params, tol=1e-13)
    scale = np.max(np.abs(q3.values))
    assert np.max(np.abs(q3.values - 3.0 * q1.values)) < 1e-10 * max(1.0, scale)


def test_solve_adjointness(params):
    # the operator is symmetric: <f, A^{-1} g> = <g, A^{-1} f>
    grid = params.grid
    n = problems.random_band_state(params, 3, 0.3, seed=56).n
    rng = np.random.default_rng(57)
    f = RealField(grid, rng.standard_normal(grid.shape))
    g = RealField(grid, rng.standard_normal(grid.shape))
    qf, _ = solve_driving_potential(n, f, params, tol=1e-13)
    qg, _ = solve_driving_potential(n, g, params, tol=1e-13)
    a = np.sum(f.values * qg.values) * grid.dx
    b = np.sum(g.values * qf.values) * grid.dx
    assert abs(a - b) < 1e-9 * max(1.0, abs(a))


def test_energy_identity(params):
    # <<grad Q, grad Q>>_N = -int target * Q (integration by parts)
    grid = params.grid
    n = problems.random_band_state(params, 3, 0.3, seed=58).n
    rng = np.random.default_rng(59)
    target = RealField(grid, rng.standard_normal(grid.shape))
    q, _ = solve_driving_potential(n, target, params, tol=1e-13)
    gq = gradient(q)[0]
    om = omega(n, params)
    lhs = np.sum(n.values * gq.values**2 + om.values * q.values**2) * grid.dx
    rhs = -np.sum(target.values * q.values) * grid.dx
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_self_distance_zero(params):
    n = problems.random_band_state(params, 3, 0.3, seed=60).n
    assert approx_distance(n, n, 1e-3, params) == 0.0
    assert path_distance_upper(n, n, 4, params).value_sq < 1e-24


def test_distance_positive(params):
    na = problems.single_mode_state(params, 1, 0.004).n
    nb = problems.single_mode_state(params, 2, 0.004).n
    assert approx_distance(na, nb, 1e-3, params) > 0
    assert path_distance_upper(na, nb, 8, params).value_sq > 0


def test_forward_reverse_symmetry(params):
    na = problems.random_band_state(params, 2, 0.2, seed=61).n
    nb = problems.random_band_state(params, 2, 0.2, seed=62).n
    fwd = path_distance_upper(na, nb, 16, params).value_sq
    rev = path_distance_upper(nb, na, 16, params).value_sq
    assert abs(fwd - rev) < 1e-8 * max(1.0, fwd)


def test_path_refinement_stabilizes(params):
    na = problems.random_band_state(params, 2, 0.2, seed=63).n
    nb = problems.random_band_state(params, 2, 0.2, seed=64).n
    v8 = path_distance_upper(na, nb, 8, params).value_sq
    v16 = path_distance_upper(na, nb, 16, params).value_sq
    v32 = path_distance_upper(na, nb, 32, params).value_sq
    # trapezoid error is O(segments^-2)
    assert abs(v32 - v16) < abs(v16 - v8)
    assert abs(v32 - v16) < 1e-3 * abs(v32)


def test_distance_bound_by_l2(params):
    # squared distance to the uniform state <= g^2 ||N - m0||_L2^2 (with a
    # 2% quadrature allowance), for corridor samples
    rc = rate_constants(params)
    uniform = RealField(params.grid, np.full(params.grid.shape, params.m0))
    for seed in (65, 66, 67):
        n0 = problems.random_band_state(params, 3, 0.5, seed=seed).n
        assert thermo.in_corridor(n0, params)
        dev = l2_norm(RealField(params.grid, n0.values - params.m0))
        bound = rc.gsq * dev**2 * 1.02
        val = path_distance_upper(n0, uniform, 16, params).value_sq
        assert val <= bound


def test_metric_axiom_battery(params):
    samples = [
        problems.random_band_state(params, 2, 0.2, seed=s).n for s in (68, 69, 70)
    ]
    report = metric_axiom_checks(samples, params, segments=8)
    assert report["ok"]
    for pair in report["pairs"]:
        assert pair["forward_sq"] >= pair["positivity_floor"] * 0.99
