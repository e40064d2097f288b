import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symplab.acceptance import toral_count
from symplab.census import (
    census,
    deduplicate,
    detect_periodic_spot,
    find_periodic,
    growth_exponent,
    lyapunov_spectrum,
    renormalized_distance,
)
from symplab.maps import AffineChart, Chart, HenonLike, IntegrableTwist, Iterate, LinearSymplectic, StandardMap
from symplab.normalform import GOLDEN, shear_to_rotation
from symplab.polynomial import Polynomial
from symplab.util import make_rng

TORUS = (np.zeros(2), np.ones(2))
CAT = [[2.0, 1.0], [1.0, 1.0]]


def test_standard_map_fixed_points():
    s = find_periodic(StandardMap(0.5), TORUS, 1)
    pts = sorted(tuple(np.round(p.point, 9)) for p in s.points)
    assert pts == [(0.0, 0.0), (0.5, 0.0)]
    assert all(p.residual < 1e-10 for p in s.points)
    assert not s.continuum


def test_half_rotation_flags_continuum():
    s = find_periodic(IntegrableTwist([0.5]), (np.array([0.0, -0.5]), np.array([1.0, 0.5])), 2, seeds_per_axis=6)
    assert s.dropped == 0 and s.continuum


def test_henon_quadratic_fixed_point_is_origin():
    s = find_periodic(HenonLike(Polynomial(1, {(2,): 0.5})), (-np.ones(2), np.ones(2)), 1, seeds_per_axis=5)
    assert len(s.points) == 1 and np.allclose(s.points[0].point, 0, atol=1e-12)


def test_growth_exponent_arithmetic():
    assert growth_exponent({2: 4}) == pytest.approx(2.0)
    assert growth_exponent({1: 0, 2: 0, 3: 0}) == 0.0


def test_toral_count_closed_form():
    lam = (3 + math.sqrt(5)) / 2
    for k in range(1, 13):
        assert toral_count(k) == round(lam**k + lam**-k - 2)
        # |det(M^k - I)| computed independently
        Mk = np.linalg.matrix_power(np.array([[2, 1], [1, 1]], dtype=object), k)
        assert toral_count(k) == abs((Mk[0, 0] - 1) * (Mk[1, 1] - 1) - Mk[0, 1] * Mk[1, 0])


def test_growth_exponent_matches_formula_counts():
    counts = {k: toral_count(k) for k in range(1, 13)}
    expected = max(math.log(c) / math.log(k) for k, c in counts.items() if k >= 2)
    assert growth_exponent(counts) == pytest.approx(expected, abs=1e-9)


def test_cat_map_census_counts():
    f = LinearSymplectic(CAT, chart=Chart.TORUS)
    rep, _ = census(f, TORUS, range(1, 6), seeds_for=lambda k: 3 * math.ceil(math.sqrt(toral_count(k))))
    assert all(rep.dividing[k] == toral_count(k) for k in range(1, 6))
    # minimal periods: Per_4 minus Per_2 points
    assert rep.counts[4] == toral_count(4) - toral_count(2)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_deduplication_is_order_independent(seed):
    f = LinearSymplectic(CAT, chart=Chart.TORUS)
    rng = make_rng(seed)
    seeds = rng.random((400, 2))
    a = find_periodic(f, TORUS, 3, seeds=seeds)
    b = find_periodic(f, TORUS, 3, seeds=seeds[rng.permutation(400)])
    pa = sorted(map(tuple, np.round([p.point for p in a.points], 8)))
    pb = sorted(map(tuple, np.round([p.point for p in b.points], 8)))
    assert pa == pb


def test_deduplicate_merges_wrapped_copies():
    pts = np.array([[0.0, 0.3], [1 - 1e-12, 0.3], [0.5, 0.5]])
    reps, _ = deduplicate(pts, 1e-9, np.array([True, True]))
    assert len(reps) == 2


def test_lyapunov_twist_is_zero():
    rep = lyapunov_spectrum(IntegrableTwist([GOLDEN], Polynomial(1, {(2,): 0.5})), np.array([0.1, 0.2]), 10_000)
    assert np.max(np.abs(rep.exponents)) < 1e-2


def test_lyapunov_cat_map_oracle():
    rep = lyapunov_spectrum(LinearSymplectic(CAT, chart=Chart.TORUS), np.array([0.1, 0.2]), 1000)
    lam = math.log((3 + math.sqrt(5)) / 2)
    assert np.allclose(rep.exponents, [lam, -lam], atol=1e-6)
    assert rep.pairing_defect < 1e-12


def test_lyapunov_standard_map_chaotic():
    rep = lyapunov_spectrum(StandardMap(6.0), np.array([0.123, 0.456]), 10_000)
    assert rep.exponents[0] > 0.5  # observational
    assert rep.pairing_defect <= 5 * math.log(10_000) / 10_000


def test_periodic_spot_shear_and_identity():
    box = (-np.ones(2), np.ones(2))
    assert detect_periodic_spot(shear_to_rotation((1,), 4).as_map(), box, 4, tol=1e-12) == 1.0
    assert detect_periodic_spot(LinearSymplectic(np.eye(2)), box, 7) == 1.0


def test_no_periodic_spot_for_standard_map():
    box = (np.array([0.1, 0.1]), np.array([0.4, 0.4]))
    assert detect_periodic_spot(StandardMap(1.0), box, 5, tol=1e-10) == 0.0


def test_renormalized_distance_self_and_identity():
    f = StandardMap(0.3)
    H = AffineChart.scaling([0.5, 0.5], 0.01, 0.01)
    target = lambda Z: H.inverse()(Iterate(f, 2)(H(Z)))  # noqa: E731
    assert renormalized_distance(f, H, 2, target) == 0.0
    assert renormalized_distance(LinearSymplectic(np.eye(2)), None, 0, lambda Z: Z) == 0.0
