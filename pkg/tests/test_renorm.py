import math
from fractions import Fraction as F

import numpy as np
import pytest

from symplab.acceptance import _rational_models
from symplab.errors import AsymmetricC, BoxOutsideLinearization, InsufficientPoints
from symplab.maps import check_symplectic, jacobian
from symplab.polynomial import Polynomial
from symplab.renorm import (
    HomoclinicModel,
    check_model_identities,
    convergence_check,
    henon_limit,
    local_linear,
    rescaled_return,
    return_map,
    snap_nu,
    transition_map,
)
from symplab.util import make_rng


def _affine(n=1, a=F(1, 3), **kw):
    half = (F(1, 2),) * n
    return HomoclinicModel(n, 1.0, half, half, a, F(2), F(-1, 2), **kw)


def test_identities_exact():
    rep = check_model_identities(_affine())
    assert rep.passed and rep.tol == 0
    assert rep.bc_defect == 0 and rep.c_inverse_b_defect == 0 and rep.incidence_residual == 0


def test_identity_defect_measured():
    m = HomoclinicModel(1, 1.0, (0.5,), (0.5,), 0.3, 2.0, -0.4999)
    rep = check_model_identities(m)
    assert not rep.bc and rep.bc_defect == pytest.approx(2e-4, rel=1e-9)


def test_symmetric_C_from_phi1():
    for m in _rational_models():
        assert check_model_identities(m).symmetry_defect == 0


def test_local_linear():
    m = _affine()
    assert np.array_equal(local_linear(m, 0).M, np.eye(2))
    L = local_linear(m, 3)
    assert np.isclose(np.linalg.det(L.M), 1.0)
    assert check_symplectic(L, np.zeros((1, 2))).max_defect < 1e-12
    # (x^s + X, e^{-j tau}(y^u + Y)) is carried to (e^{-j tau}(x^s + X), y^u + Y)
    X, Y, j = 0.01, -0.02, 3
    z = np.array([0.5 + X, math.exp(-j) * (0.5 + Y)])
    assert np.allclose(L(z), [math.exp(-j) * (0.5 + X), 0.5 + Y], rtol=1e-14, atol=0)
    with pytest.raises(OverflowError):
        local_linear(m, 10_000)


def test_incidence_is_exact_on_rationals():
    m = _rational_models()[0]
    xbar, ybar = m.transition_exact([F(0)], m.yu)
    assert xbar == [m.xs[0]] and ybar == [0]


def test_affine_transition_determinant():
    T = transition_map(_affine())
    J = jacobian(T, make_rng(0).uniform(-0.1, 0.1, (5, 2)) + [0, 0.5])
    assert np.allclose(np.linalg.det(J), 1.0, atol=1e-14)
    assert np.allclose(J[0], [[1 / 3, 2], [-0.5, 0]])


def test_perturbation_term_at_incidence():
    m = _affine(V=Polynomial(1, {(2,): F(1, 2), (1,): F(1, 10)}))
    nu = 0.01
    out = transition_map(m, nu)(np.array([[0.0, 0.5]]))[0]
    # grad V(0) = 1/10
    expected = (2 * 0.5 + 0.5) * nu**m.r - nu ** (m.r + 1) * 0.1
    assert out[1] == pytest.approx(expected, rel=1e-12, abs=1e-18)


def test_snap_relation():
    m = _rational_models()[0]
    for nu in (1e-2, 3e-3):
        p = snap_nu(m, nu)
        assert abs(float(m.b) * p.nu**m.r - math.exp(-p.j * m.tau)) <= 1e-12
        assert math.exp(-m.tau / m.r) <= p.nu / nu <= math.exp(m.tau / m.r)
    with pytest.raises(ValueError):
        snap_nu(HomoclinicModel(1, 1.0, (0.5,), (0.5,), 0.0, -2.0, 0.5), 0.01)


def test_return_map_centre_and_affinity():
    m = _affine()
    p = snap_nu(m, 0.01)
    R = return_map(m, p)
    z0 = R(np.zeros((1, 2)))[0]
    # substituting X = Y = 0: Xbar = a e^{-j tau} x^s, Ybar = c x^s + x^s / b = 0
    assert z0[0] == pytest.approx(float(m.a) * math.exp(-p.j * m.tau) * 0.5, rel=1e-12)
    assert z0[1] == pytest.approx(0.0, abs=1e-12)
    J = jacobian(R, make_rng(1).uniform(-1e-3, 1e-3, (4, 2)))
    assert np.allclose(J, J[0], atol=1e-12)


def test_return_maps_symplectic():
    m = _affine(V=Polynomial(1, {(4,): F(1, 4)}))
    p = snap_nu(m, 0.01)
    Z = make_rng(2).uniform(-2, 2, (50, 2))
    assert check_symplectic(rescaled_return(m, p), Z, tol=1e-10).passed
    Zs = Z * np.array([p.nu, p.nu / 2])
    assert check_symplectic(return_map(m, p), Zs, tol=1e-10).passed


def test_box_outside_linearization():
    m = HomoclinicModel(1, 1.0, (0.9,), (0.5,), 0, 2.0, -0.5, linear_radius=0.95)
    with pytest.raises(BoxOutsideLinearization):
        return_map(m, snap_nu(m, 0.05))


def test_rotation_limit_rate():
    m = _affine()
    Z = make_rng(3).uniform(-2, 2, (200, 2))
    rot = np.column_stack([Z[:, 1], -Z[:, 0]])
    prev = None
    for nu in (1e-2, 5e-3):
        d = np.max(np.abs(rescaled_return(m, snap_nu(m, nu))(Z) - rot))
        assert d < 10 * nu
        if prev is not None:
            assert d < prev
        prev = d


def test_henon_limit_examples():
    z = np.array([[0.3, -0.7]])
    assert np.allclose(henon_limit(_affine())(z), [[-0.7, -0.3]])
    quartic = _affine(V=Polynomial(1, {(4,): F(1, 4)}))
    assert np.allclose(henon_limit(quartic)(z), [[-0.7, 0.343 - 0.3]])
    m2 = HomoclinicModel(
        2, 1.0, (F(1), F(1)), (F(1, 2), F(1, 2)), 0, F(2), F(-1, 2),
        phi1=((Polynomial.zero(4), Polynomial(4, {(0, 0, 0, 1): 1})),
              (Polynomial(4, {(0, 0, 1, 0): 1}), Polynomial.zero(4))),
    )
    assert np.array_equal(m2.C_matrix(), [[0, 1], [1, 0]])
    Vhat = henon_limit(m2).V
    assert Vhat == Polynomial(2, {(1, 1): -1.0})


def test_asymmetric_C_rejected():
    m = HomoclinicModel(
        2, 1.0, (1.0, 1.0), (0.5, 0.5), 0, 2.0, -0.5,
        phi1=((Polynomial.zero(4), Polynomial(4, {(0, 0, 0, 1): 1.0})),
              (Polynomial.zero(4), Polynomial.zero(4))),
    )
    with pytest.raises(AsymmetricC):
        henon_limit(m)


def test_convergence_affine_exact():
    # with a = 0 there is no dropped e^{-j tau} term left
    rep = convergence_check(_affine(a=0), [1e-2, 5e-3], grid=5)
    assert np.all(rep.distances < 1e-9) and rep.slope is None


def test_convergence_single_scale():
    with pytest.raises(InsufficientPoints):
        convergence_check(_affine(), [1e-2])


def test_convergence_slope_quartic():
    rep = convergence_check(_rational_models()[0], [1e-2, 5e-3, 2.5e-3], grid=17)
    assert rep.monotone and 0.8 <= rep.slope <= 1.2
    assert rep.table().splitlines()[0] == "nu,j,distance"


def test_model_config_round_trip():
    for m in _rational_models():
        back = HomoclinicModel.from_config(m.to_config())
        assert check_model_identities(back).passed
        assert back.C_exact() == m.C_exact()
