import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symplab.maps import (
    AffineChart,
    Chart,
    Conjugate,
    GridPermutation,
    HenonLike,
    IntegrableTwist,
    Iterate,
    LinearSymplectic,
    StandardMap,
    check_symplectic,
    export_orbit,
    iterate_orbit,
    jacobian,
    map_from_config,
    reduce_torus,
    wrap_difference,
)
from symplab.normalform import GeneratingFunction, GeneratingFunctionMap, FourierPoly
from symplab.polynomial import Polynomial
from symplab.util import make_rng

unit = st.floats(-5, 5, allow_nan=False)


def test_standard_map_a0_is_shear():
    assert np.allclose(StandardMap(0.0)([0.3, 0.5]), [0.8, 0.5])


def test_twist_pure_rotation_mod1():
    assert np.allclose(IntegrableTwist([0.25])([0.9, 0.7]), [0.15, 0.7])


def test_generating_function_quadratic_twist():
    # theta = tb - (alpha + r)  =>  tb = theta + alpha + r
    S = GeneratingFunction([0.1], Polynomial(1, {(2,): 0.5}), FourierPoly.zero(1))
    assert np.allclose(GeneratingFunctionMap(S)([0.0, 0.2]), [0.3, 0.2], atol=1e-14)


def test_linear_jacobian_is_matrix():
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    f = LinearSymplectic(M, chart=Chart.TORUS)
    assert np.array_equal(jacobian(f, [0.3, 0.4]), M)


@given(st.floats(-4, 4), st.floats(0, 1), st.floats(0, 1))
def test_standard_jacobian_formula(a, x, p):
    c = a * np.cos(2 * np.pi * x)
    J = jacobian(StandardMap(a), [x, p])
    assert np.allclose(J, [[1 + c, 1], [c, 1]])


def test_central_difference_matches_analytic():
    f = StandardMap(1.0)
    Z = make_rng(3).random((20, 2))
    Ja = jacobian(f, Z, "analytic")
    Jc = jacobian(f, Z, "central_difference", h=1e-5)
    assert np.max(np.abs(Ja - Jc)) < 1e-6


def test_symplectic_defects():
    rng = make_rng(0)
    cat = LinearSymplectic([[2, 1], [1, 1]], chart=Chart.TORUS)
    assert check_symplectic(cat, rng.random((10, 2))).max_defect == 0.0
    assert check_symplectic(StandardMap(3.0), rng.random((100, 2)), tol=1e-12).passed
    henon = HenonLike(Polynomial(1, {(4,): 0.25}))
    assert check_symplectic(henon, rng.uniform(-1, 1, (100, 2)), tol=1e-12).passed


def test_non_symplectic_linear_fails():
    f = LinearSymplectic([[2.0, 0.0], [0.0, 1.0]])
    rep = check_symplectic(f, np.zeros((3, 2)))
    assert not rep.passed and rep.max_defect == pytest.approx(1.0)


def test_orbits():
    o = iterate_orbit(IntegrableTwist([0.5]), np.array([0.0, 0.1]), 2)
    assert np.allclose(o[:, 0], [0, 0.5, 0])
    o = iterate_orbit(StandardMap(0.0), np.array([0.0, 0.25]), 4)
    assert np.allclose(o[:, 0], [0, 0.25, 0.5, 0.75, 0])


def test_grid_swap_is_involution():
    perm = np.arange(4)
    perm[[0, 3]] = [3, 0]
    g = GridPermutation((2, 2), perm)
    z = np.array([0.25, 0.25])
    o = iterate_orbit(g, z, 2)
    assert np.allclose(o[1], [0.75, 0.75]) and np.allclose(o[2], z)


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1))
def test_grid_permutation_inverse_and_volume(seed):
    rng = make_rng(seed)
    g = GridPermutation((4, 6), rng.permutation(24))
    Z = rng.random((50, 2))
    assert np.allclose(g.inverse()(g(Z)), Z, atol=1e-14)
    # each cell goes to exactly one cell of the same size: images of cell centres are cell centres
    idx, _ = g.cell_of(g(Z))
    assert np.all((idx >= 0) & (idx < np.array([4, 6])))
    assert np.array_equal(np.sort(g.perm), np.arange(24))


@given(st.lists(unit, min_size=2, max_size=2))
def test_reduce_torus_range(z):
    r = reduce_torus(np.array(z), np.array([True, False]))
    assert 0 <= r[0] < 1 and r[1] == z[1]


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_wrap_difference_symmetric_range(a, b):
    d = wrap_difference(np.array([a - b]), np.array([True]))[0]
    assert -0.5 <= d < 0.5
    assert abs((d - (a - b)) - round(d - (a - b))) < 1e-9


def test_config_round_trip():
    maps = [
        StandardMap(0.7),
        IntegrableTwist([0.3], Polynomial(1, {(2,): 0.5})),
        HenonLike(Polynomial(1, {(4,): 0.25})),
        LinearSymplectic([[2, 1], [1, 1]], chart=Chart.TORUS),
        GridPermutation((2, 2), [1, 0, 3, 2]),
        Iterate(StandardMap(0.3), 3),
    ]
    z = np.array([[0.12, 0.34]])
    for f in maps:
        g = map_from_config(f.to_config())
        assert np.allclose(f(z), g(z))


def test_affine_chart_conformal_factor_and_conjugate():
    H = AffineChart.scaling([0.1, 0.2], 0.5, 0.25)
    assert H.conformal_factor == pytest.approx(0.125)
    f = StandardMap(0.0)
    with pytest.raises(ValueError):
        AffineChart(np.diag([2.0, 1.0, 1.0, 1.0]))  # scales only one symplectic pair
    # conjugating by the identity chart changes nothing
    c = Conjugate(LinearSymplectic([[1.0, 1.0], [0.0, 1.0]]), AffineChart(np.eye(2)))
    assert np.allclose(c([0.1, 0.2]), [0.3, 0.2])
    assert f.dim == 2


def test_export_orbit_table():
    text = export_orbit(np.array([[0.0, 1.0], [0.5, 1.0]]))
    assert text.splitlines()[0] == "step,z0,z1"
    assert text.splitlines()[2].startswith("1,0.5")
