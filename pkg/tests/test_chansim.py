import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfas.chansim import (
    GridSpec,
    build_covariance,
    chi2_statistic,
    count_upcrossings,
    estimate_hsp,
    factor_covariance,
    sample_field,
    simulate_sup,
    steering,
)
from cfas.errors import CapExceededError, DomainError, FactorizationError
from cfas.hsp import hsp_closed
from cfas.lcr import broadside_rate
from cfas.model import ChannelParams, CorrelationModel, Geometry
from cfas.specfun import marcum_q1


def j0_series(z, terms=60):
    return math.fsum((-0.25 * z * z) ** k / math.factorial(k) ** 2 for k in range(terms))


def first_j0_root():
    lo, hi = 2.0, 3.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if j0_series(lo) * j0_series(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# --- grid and covariance -------------------------------------------------


def test_grid_counts_and_cap():
    assert GridSpec(1, (0.25,), 0.01).shape == (26,)
    assert GridSpec(2, (0.25, 0.25), 0.01).n_points == 676
    assert GridSpec(3, (0.25,) * 3).n_points == 26**3
    with pytest.raises(CapExceededError):
        build_covariance(GridSpec(3, (0.25,) * 3, 0.001))
    with pytest.raises(DomainError):
        GridSpec(2, (0.25,))
    with pytest.raises(DomainError):
        GridSpec(1, (0.25,), 0.0)


def test_single_point_covariance():
    assert build_covariance(GridSpec(0)).tolist() == [[1.0]]
    assert build_covariance(GridSpec(2, (0.0, 0.0))).tolist() == [[1.0]]


def test_covariance_at_first_j0_zero():
    root = first_j0_root()
    assert root == pytest.approx(2.404825557695773, abs=1e-12)
    tau = root / (2 * math.pi)
    cov = build_covariance(GridSpec(1, (tau,), tau))
    assert abs(cov[0, 1]) < 1e-12


@pytest.mark.parametrize("tau", [1e-3, 3e-3, 1e-2])
def test_covariance_small_lag(tau):
    cov = build_covariance(GridSpec(1, (tau,), tau))
    assert cov[0, 1] == pytest.approx(1 - math.pi**2 * tau**2, abs=5 * (math.pi * tau) ** 4)


def test_quadratic_kernel():
    cov = build_covariance(GridSpec(1, (0.3,), 0.3), CorrelationModel.quadratic(2.0))
    assert cov[0, 1] == pytest.approx(math.exp(-2.0 * 0.09), rel=1e-15)


def test_covariance_symmetric_unit_diagonal():
    cov = build_covariance(GridSpec(2, (0.1, 0.2), 0.05))
    assert np.array_equal(cov, cov.T)
    assert np.all(np.diag(cov) == 1.0)


# --- factorization -------------------------------------------------------


def test_identity_factor():
    f = factor_covariance(np.eye(4))
    assert np.array_equal(f.lower, np.eye(4)) and f.jitter == 0.0


@given(st.floats(-0.99, 0.99))
def test_two_by_two_factor(rho):
    f = factor_covariance(np.array([[1.0, rho], [rho, 1.0]]))
    assert f.lower[1, 1] == pytest.approx(math.sqrt(1 - rho * rho), rel=1e-12)
    assert f.lower[1, 0] == pytest.approx(rho, rel=1e-12, abs=1e-300)


def test_dense_line_reconstruction():
    cov = build_covariance(GridSpec(1, (0.25,), 0.01))
    f = factor_covariance(cov)
    assert f.jitter in (0.0, 1e-12, 1e-10, 1e-8)
    assert np.max(np.abs(f.lower @ f.lower.T - cov)) < 1e-8


def test_indefinite_matrix():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(FactorizationError):
        factor_covariance(bad)
    f = factor_covariance(bad, allow_projection=True)
    assert f.projected and f.min_eigenvalue == pytest.approx(-1.0)
    assert np.allclose(np.einsum("ij,ij->i", f.lower, f.lower), 1.0)


def test_factor_validation():
    with pytest.raises(DomainError):
        factor_covariance(np.ones((2, 3)))
    with pytest.raises(DomainError):
        factor_covariance(np.array([[1.0, 0.5], [0.1, 1.0]]))


def test_cube_kernel_needs_projection():
    # J0(2 pi tau) is not positive definite in three dimensions
    grid = GridSpec(3, (0.25,) * 3, 0.05)
    with pytest.raises(FactorizationError):
        factor_covariance(build_covariance(grid))
    assert factor_covariance(build_covariance(grid), allow_projection=True).projected


# --- fields --------------------------------------------------------------


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("convention", ["printed", "embedded"])
def test_steering_unit_modulus(dim, convention):
    grid = GridSpec(dim, (0.2,) * dim, 0.05)
    a = steering(grid.points(), ChannelParams(kappa=1.0, phi=0.6, theta=1.1), convention)
    assert np.all(np.abs(a) == pytest.approx(1.0, abs=1e-15))


def test_steering_conventions_differ_in_2d_only():
    p = ChannelParams(kappa=1.0, phi=0.6, theta=1.1)
    pts2 = GridSpec(2, (0.2, 0.2), 0.1).points()
    assert not np.allclose(steering(pts2, p, "printed"), steering(pts2, p, "embedded"))
    pts3 = GridSpec(3, (0.2,) * 3, 0.1).points()
    assert np.array_equal(steering(pts3, p, "printed"), steering(pts3, p, "embedded"))
    with pytest.raises(DomainError):
        steering(pts2, p, "other")


def test_pure_los_limit():
    grid = GridSpec(1, (0.25,), 0.05)
    f = factor_covariance(build_covariance(grid))
    h = sample_field(f, ChannelParams(kappa=1e12, phi=0.4), grid, np.random.default_rng(0), beta=1.7).values
    assert np.allclose(np.abs(h) ** 2, 1.7, rtol=1e-5)


def test_rayleigh_power_moment():
    grid = GridSpec(0)
    f = factor_covariance(build_covariance(grid))
    h = sample_field(f, ChannelParams(kappa=0.0), grid, np.random.default_rng(1), replicates=100_000, beta=2.5).values
    p = np.abs(h[:, 0]) ** 2
    assert abs(p.mean() - 2.5) < 3 * p.std(ddof=1) / math.sqrt(len(p))


def test_scattered_correlation():
    grid = GridSpec(1, (0.1,), 0.1)
    f = factor_covariance(build_covariance(grid))
    h = sample_field(f, ChannelParams(kappa=0.0), grid, np.random.default_rng(2), replicates=100_000).values
    prod = (h[:, 0] * np.conj(h[:, 1])).real
    target = float(j0_series(0.2 * math.pi))
    assert abs(prod.mean() - target) < 3 * prod.std(ddof=1) / math.sqrt(len(prod))


def test_marginal_mean():
    k = 1.5
    grid = GridSpec(1, (0.05,), 0.05)
    f = factor_covariance(build_covariance(grid))
    h = sample_field(f, ChannelParams(kappa=k, phi=0.9), grid, np.random.default_rng(4), replicates=100_000).values
    X = chi2_statistic(h[:, 1], k)
    assert abs(X.mean() - (2 + 2 * k)) < 3 * X.std(ddof=1) / math.sqrt(len(X))


def test_factor_shape_mismatch():
    with pytest.raises(DomainError):
        sample_field(np.eye(3), ChannelParams(kappa=1.0), GridSpec(1, (0.1,), 0.1), np.random.default_rng(0))


def test_refinement_monotone():
    fine = GridSpec(1, (0.5,), 0.01)
    f = factor_covariance(build_covariance(fine))
    h = sample_field(f, ChannelParams(kappa=2.0, phi=0.5), fine, np.random.default_rng(5), replicates=500).values
    X = chi2_statistic(h, 2.0)
    full = X.max(axis=1)
    for step in (2, 5, 10):
        assert np.all(X[:, ::step].max(axis=1) <= full)


# --- estimators ----------------------------------------------------------


def test_determinism_across_workers():
    p = ChannelParams(kappa=0.5, phi=0.3)
    grid = GridSpec(1, (0.25,), 0.01)
    a = estimate_hsp(p, grid, u=[1.5, 3.0], replicates=7_000, seed=11, workers=1)
    b = estimate_hsp(p, grid, u=[1.5, 3.0], replicates=7_000, seed=11, workers=3)
    c = estimate_hsp(p, grid, u=[1.5, 3.0], replicates=7_000, seed=11, workers=1)
    assert a == b == c
    d = estimate_hsp(p, grid, u=[1.5, 3.0], replicates=7_000, seed=12)
    assert d != a


def test_estimate_validation():
    p = ChannelParams(kappa=0.5)
    with pytest.raises(DomainError):
        estimate_hsp(p, GridSpec(0), u=1.0, replicates=99)
    with pytest.raises(DomainError):
        estimate_hsp(p, GridSpec(0), u=-1.0, replicates=100)


@pytest.mark.parametrize("k", [0.2, 2.0])
def test_point_estimate_matches_marcum(k):
    p = ChannelParams(kappa=k)
    for u in (1.0, 2.0, 3.0):
        est = estimate_hsp(p, GridSpec(0), u=u, replicates=100_000, seed=21)
        ref = marcum_q1(math.sqrt(2 * k), math.sqrt(est.x))
        assert abs(est.p_hat - ref) < 3 * est.stderr


def test_degenerate_grid_is_point():
    p = ChannelParams(kappa=0.2)
    a = estimate_hsp(p, GridSpec(0), u=2.0, replicates=3_000, seed=5)
    b = estimate_hsp(p, GridSpec(2, (0.0, 0.0)), u=2.0, replicates=3_000, seed=5)
    assert a.p_hat == b.p_hat


@pytest.mark.slow
def test_line_estimate_matches_eec_small_k():
    p = ChannelParams(kappa=0.2, phi=math.pi / 4)
    grid = GridSpec(1, (0.25,), 0.01)
    xs = [8.0, 10.0, 12.0, 14.0]
    ests = estimate_hsp(p, grid, u=[x / 2.4 for x in xs], replicates=100_000, seed=7)
    for e in ests:
        ref = hsp_closed(1, p, Geometry((0.25,)), e.x)
        assert 0.005 <= ref <= 0.2
        assert abs(e.p_hat - ref) < 3 * e.stderr


def test_upcrossing_guards():
    p = ChannelParams(kappa=1.0)
    with pytest.raises(DomainError):
        count_upcrossings(p, GridSpec(2, (0.1, 0.1), 0.01), x=1.0, replicates=100)
    with pytest.raises(DomainError):
        count_upcrossings(p, GridSpec(1, (0.5,), 0.02), x=1.0, replicates=100)


def test_no_upcrossings_near_zero_threshold():
    est = count_upcrossings(ChannelParams(kappa=1.0), GridSpec(1, (0.5,), 0.01), x=1e-9, replicates=2_000, seed=1)
    assert est.rate < 0.01


@pytest.mark.slow
@pytest.mark.parametrize("k,x", [(2.0, 6.0), (0.0, 2.0)])
def test_broadside_upcrossings(k, x):
    p = ChannelParams(kappa=k)
    est = count_upcrossings(p, GridSpec(1, (1.0,), 0.01), x=x, replicates=100_000, seed=8)
    assert abs(est.rate - broadside_rate(p, x)) < 3 * est.stderr


def test_projected_cube_smoke():
    grid = GridSpec(3, (0.25,) * 3, 0.025)
    sups, factor = simulate_sup(ChannelParams(kappa=0.2, phi=math.pi / 4), grid, replicates=200, seed=3)
    assert factor.projected and sups.shape == (200,)
    assert np.all(sups > 0)
