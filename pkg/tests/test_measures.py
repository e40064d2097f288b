import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symplab.errors import DegenerateCurve, EmptyRestriction, NonConvergence
from symplab.maps import Chart, IntegrableTwist, LinearSymplectic
from symplab.measures import (
    DiscreteMeasure,
    EmergenceCurve,
    build_ensemble,
    distance_matrix,
    emergence_at_scale,
    emergence_curve,
    emergence_order,
    empirical_measure,
    kw_entropic,
    kw_exact,
    restriction_check,
    transport_vertex_minimum,
)
from symplab.normalform import GOLDEN
from symplab.util import make_rng


def _random_measure(rng, m, d=2, periodic=True):
    w = rng.random(m) + 0.05
    return DiscreteMeasure(rng.random((m, d)), w / w.sum(), periodic)


def test_dirac_distance_is_ground_metric():
    mu = DiscreteMeasure.dirac([0.1, 0.2], True)
    nu = DiscreteMeasure.dirac([0.95, 0.3], True)
    assert kw_exact(mu, nu) == pytest.approx(0.15)


def test_two_atoms_to_midpoint():
    mu = DiscreteMeasure([[0.0], [0.5]], [0.5, 0.5], True)
    nu = DiscreteMeasure.dirac([0.25], True)
    assert kw_exact(mu, nu) == pytest.approx(0.25, abs=1e-12)


def test_identity_and_symmetry_on_random_pairs():
    rng = make_rng(7)
    for _ in range(50):
        mu = _random_measure(rng, rng.integers(1, 6))
        nu = _random_measure(rng, rng.integers(1, 6))
        assert kw_exact(mu, mu) == 0.0
        assert kw_exact(mu, nu) == pytest.approx(kw_exact(nu, mu), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_triangle_inequality(seed):
    rng = make_rng(seed)
    a, b, c = (_random_measure(rng, rng.integers(1, 5)) for _ in range(3))
    assert kw_exact(a, c) <= kw_exact(a, b) + kw_exact(b, c) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
def test_lp_matches_vertex_enumeration(seed, m, n):
    rng = make_rng(seed)
    mu, nu = _random_measure(rng, m), _random_measure(rng, n)
    assert kw_exact(mu, nu) == pytest.approx(transport_vertex_minimum(mu, nu), abs=1e-9)


def test_entropic_within_gap():
    rng = make_rng(11)
    for _ in range(10):
        mu, nu = _random_measure(rng, 4), _random_measure(rng, 4)
        r = kw_entropic(mu, nu, lam=1e-3)
        assert abs(r.value - kw_exact(mu, nu)) <= r.gap + 1e-12
    same = kw_entropic(mu, mu, lam=1e-2)
    assert same.value <= same.gap + 1e-12


def test_entropic_approaches_exact_as_regularization_shrinks():
    rng = make_rng(5)
    mu, nu = _random_measure(rng, 6), _random_measure(rng, 6)
    exact = kw_exact(mu, nu)
    errs = []
    for lam in (1e-1, 1e-2, 1e-3):
        r = kw_entropic(mu, nu, lam=lam, iterations=20_000)
        assert abs(r.value - exact) <= r.gap + 1e-12
        errs.append(r.value - exact)
    assert errs[0] >= errs[1] >= errs[2] - 1e-9


def test_entropic_gap_bound_raises():
    rng = make_rng(2)
    mu, nu = _random_measure(rng, 5), _random_measure(rng, 5)
    with pytest.raises(NonConvergence):
        kw_entropic(mu, nu, lam=1.0, iterations=2, gap_bound=1e-12)


def test_empirical_identity_is_single_cell():
    ident = LinearSymplectic(np.eye(2), chart=Chart.TORUS)
    mu = empirical_measure(ident, [0.3, 0.71], n_iter=100, cell=0.125)
    assert mu.size == 1 and np.allclose(mu.points[0], [0.3125, 0.6875])
    assert mu.weights.sum() == 1.0


def test_empirical_golden_rotation_equidistributes():
    f = IntegrableTwist([GOLDEN])
    mu = empirical_measure(f, [0.0, 0.3], n_iter=100_000, cell=1 / 64)
    assert mu.size == 64
    assert 0.5 * np.abs(mu.weights - 1 / 64).sum() < 2e-3
    assert mu.counts.sum() == 100_000


def test_empirical_two_periodic_orbit():
    mu = empirical_measure(IntegrableTwist([0.5]), [0.1, 0.3], n_iter=1000, cell=1 / 16)
    assert mu.size == 2 and np.array_equal(mu.weights, [0.5, 0.5])


def test_identical_measures_have_emergence_one():
    D = np.zeros((10, 10))
    for eps in (1e-3, 0.1, 1.0):
        assert emergence_at_scale(D, eps) == (1, 1)


def _grid_diracs(n):
    c = (np.arange(n) + 0.5) / n
    return [DiscreteMeasure.dirac([x, y], False) for x in c for y in c]


def _optimal_cover_size(D, eps):
    """Exhaustive k-median over centre subsets (small instances only)."""
    S = len(D)
    for N in range(1, S + 1):
        for cs in itertools.combinations(range(S), N):
            if D[:, cs].min(axis=1).mean() < eps:
                return N
    return S


def test_grid_of_diracs_bounds():
    # coarse versions: the exhaustive optimum brackets the estimator
    for n, eps in ((3, 0.2), (4, 0.1)):
        Dc = distance_matrix(_grid_diracs(n))
        opt = _optimal_cover_size(Dc, eps)
        lo, hi = emergence_at_scale(Dc, eps)
        assert lo <= opt <= hi
    D = distance_matrix(_grid_diracs(10))
    lo, hi = emergence_at_scale(D, 0.04)
    assert lo >= 13 and lo <= hi
    # every non-centre pays at least 0.1, so at least 61 centres are needed
    assert hi >= 61


def test_scale_above_diameter():
    D = distance_matrix(_grid_diracs(4))
    assert emergence_at_scale(D, D.max() + 1e-9) == (1, 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_bounds_ordered_and_upper_monotone(seed):
    rng = make_rng(seed)
    ms = [DiscreteMeasure.dirac(p, True) for p in rng.random((25, 2))]
    D = distance_matrix(ms)
    scales = [0.3, 0.2, 0.1, 0.05, 0.02]
    c = emergence_curve(D, scales, fit=False)
    assert np.all(c.lower <= c.upper)
    assert np.all(np.diff(c.upper) >= 0)  # scales are stored in decreasing order


def test_synthetic_order_two():
    scales = np.array([0.4, 0.3, 0.2, 0.1])
    E = np.exp(scales**-2.0)
    curve = EmergenceCurve(scales, E, E)
    assert emergence_order(curve) == pytest.approx(2.0, abs=1e-9)


def test_constant_curve_is_degenerate():
    curve = EmergenceCurve(np.array([0.3, 0.2, 0.1]), np.ones(3), np.ones(3))
    with pytest.raises(DegenerateCurve):
        emergence_order(curve)


def _identity_ensemble(S=40, seed=0):
    ident = LinearSymplectic(np.eye(2), chart=Chart.TORUS)
    return build_ensemble(ident, make_rng(seed).random((S, 2)), n_iter=10, cell=1 / 64)


def test_restriction_full_domain_equal():
    ens = _identity_ensemble()
    rep = restriction_check(ens, [0, 0], [1, 1], [0.2, 0.1, 0.05])
    assert rep.mass == 1.0 and rep.passed
    assert np.array_equal(rep.full_lower, rep.restricted_lower)


def test_restriction_half_square():
    ens = _identity_ensemble()
    rep = restriction_check(ens, [0, 0], [0.5, 1], [0.2, 0.1, 0.05, 0.02])
    assert rep.passed


def test_restriction_single_statistic_and_empty():
    ens = build_ensemble(LinearSymplectic(np.eye(2), chart=Chart.TORUS), np.full((6, 2), 0.3), n_iter=4, cell=0.25)
    rep = restriction_check(ens, [0, 0], [0.5, 0.5], [0.1])
    assert rep.full_lower[0] == rep.restricted_lower[0] == 1
    with pytest.raises(EmptyRestriction):
        restriction_check(ens, [0.6, 0.6], [0.9, 0.9], [0.1])


def test_cauchy_flags_and_table():
    # half length 10 is even, so both halves of the 2-periodic orbit agree exactly
    ens = build_ensemble(IntegrableTwist([0.5]), np.array([[0.1, 0.3]]), n_iter=20, cell=0.25, cauchy_eps=0.1)
    assert ens.converged[0] and ens.cauchy[0] == 0.0
    odd = build_ensemble(IntegrableTwist([0.5]), np.array([[0.1, 0.3]]), n_iter=10, cell=0.25, cauchy_eps=0.1)
    assert not odd.converged[0]
    lines = ens.to_table().splitlines()
    assert lines[0] == "sample,cell0,cell1,weight" and len(lines) == 3
