from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symplab.errors import DegenerateTwist, NotNormalized, SmallDivisorBreakdown
from symplab.maps import EllipticNormalForm, IntegrableTwist, Iterate, check_symplectic
from symplab.normalform import (
    GOLDEN,
    FourierPoly,
    GeneratingFunction,
    GeneratingFunctionMap,
    HamiltonianFlow,
    NormalizedMap,
    bnf_step,
    cutoff,
    diophantine_margin,
    elliptic_rescale,
    homological_residual,
    is_identity_exact,
    loglog_slope,
    normalize,
    oscillation_profile,
    shear_to_rotation,
    small_divisors,
    solve_homological,
    symplectic_defect_exact,
    truncate_generating,
)
from symplab.polynomial import Polynomial
from symplab.util import make_rng

# frozen from a 40-digit mpmath brute force over k <= 100 (minimum at k = 1)
GOLDEN_MARGIN_TAU1_K100 = 0.3819660112501051


def test_margin_rational_is_zero():
    assert diophantine_margin(Fraction(1, 2), 1.0, 2).margin == 0
    assert diophantine_margin(0.5, 3.0, 5).margin == 0


def test_margin_golden_mean():
    w = diophantine_margin(GOLDEN, 1.0, 100)
    assert w.margin == pytest.approx(GOLDEN_MARGIN_TAU1_K100, abs=1e-12)
    assert w.margin > 0.2 and w.certifies(0.2)


def test_margin_resonant_component():
    w = diophantine_margin([0.0, 0.377], 1.0, 4)
    assert w.margin == 0 and w.argmin == (1, 0)


def test_small_divisor_values():
    d = small_divisors(np.array([[1], [2]]), np.array([0.25]))
    assert np.allclose(d, [np.sqrt(2), 2.0])


def test_homological_zero_rhs():
    assert solve_homological(FourierPoly.zero(1), GOLDEN).is_zero


def test_homological_single_mode_formula():
    om = FourierPoly.from_table(1, {((1,), (2,)): 0.3 + 0.1j, ((-1,), (2,)): 0.3 - 0.1j})
    q = solve_homological(om, GOLDEN)
    e = np.exp(2j * np.pi * GOLDEN)
    assert np.isclose(q.table()[((1,), (2,))], e / (1 - e) * (0.3 + 0.1j))
    assert homological_residual(q, om, GOLDEN, grid=256) < 1e-12


def test_homological_resonance_breaks_down():
    om = FourierPoly.cosine((2,), (2,), 1.0)
    with pytest.raises(SmallDivisorBreakdown):
        solve_homological(om, Fraction(1, 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 16))
def test_homological_residual_random(seed, modes):
    rng = make_rng(seed)
    om = FourierPoly.zero(1)
    for m in range(1, modes + 1):
        om = om + FourierPoly.cosine((m,), (3,), rng.uniform(-1, 1)) + FourierPoly.sine((m,), (3,), rng.uniform(-1, 1))
    q = solve_homological(om, GOLDEN)
    assert homological_residual(q, om, GOLDEN) < 1e-10


def _perturbed(delta=1e-3):
    s = FourierPoly.cosine((1,), (2,), delta)
    return GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), s)


def test_bnf_step_removes_degree_two():
    S1 = bnf_step(_perturbed(), 0)
    assert S1.oscillating_mass(2) <= 1e-14
    assert S1.Q.coefficient((2,)) == pytest.approx(0.5, abs=1e-14)
    assert len(S1.changes) == 1


def test_bnf_step_absorbs_mean_term():
    S = GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), FourierPoly.cosine((0,), (2,), 0.2))
    S1 = bnf_step(S, 0)
    assert S1.Q.coefficient((2,)) == pytest.approx(0.7)
    assert S1.remainder.is_zero and S1.changes == ()


def test_bnf_step_precondition():
    S = GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), FourierPoly.cosine((1,), (2,), 0.1))
    with pytest.raises(NotNormalized):
        bnf_step(S, 1)


def test_normalize_flattens_to_degree_d_plus_2():
    s = FourierPoly.cosine((1,), (3,), 0.3) + FourierPoly.sine((2,), (4,), 0.2) + FourierPoly.cosine((1,), (5,), 0.1)
    S = GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), s)
    D = 3
    SD = normalize(S, D)
    assert all(SD.oscillating_mass(d) < 1e-12 for d in range(D + 2))
    g = NormalizedMap(GeneratingFunctionMap(S), SD.changes)
    radii = [0.2, 0.1, 0.05, 0.025]
    slope = loglog_slope(radii, oscillation_profile(g, radii, 32))
    assert abs(slope - (D + 2)) <= 0.5


def test_generating_map_symplectic():
    s = FourierPoly.cosine((1,), (3,), 0.3) + FourierPoly.sine((2,), (2,), 0.1)
    f = GeneratingFunctionMap(GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), s))
    rng = make_rng(1)
    # keep |r| small enough for the implicit angle equation to be uniquely solvable
    Z = np.column_stack([rng.random(50), rng.uniform(-0.15, 0.15, 50)])
    assert check_symplectic(f, Z).max_defect < 1e-12


def test_hamiltonian_flow_inverse_and_symplectic():
    H = FourierPoly.cosine((1,), (2,), 0.05)
    phi = HamiltonianFlow(H, 1.0)
    z = np.array([[0.3, 0.2], [0.7, -0.1]])
    back = phi.inverse()(phi(z))
    assert np.allclose(back, z, atol=1e-11)
    assert check_symplectic(phi, z).max_defect < 1e-10


def test_cutoff_profile():
    u = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    k = cutoff(u)
    assert k[0] == 1 and k[2] == 1 and k[4] == 0 and k[5] == 0 and 0 < k[3] < 1


def test_truncation_twist_inside_and_unchanged_outside():
    s = FourierPoly.cosine((1,), (3,), 0.3)
    S = GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), s)
    delta = 0.1
    f = GeneratingFunctionMap(S)
    f_trunc = GeneratingFunctionMap(truncate_generating(S, delta))
    twist = IntegrableTwist([GOLDEN], Polynomial(1, {(2,): 0.5}))
    inner = np.array([[0.37, delta / 2], [0.81, -delta / 2]])
    assert np.array_equal(f_trunc(inner), twist(inner))
    outer = np.array([[0.37, 0.25], [0.81, -0.3]])
    assert np.allclose(f_trunc(outer), f(outer), atol=1e-15)
    # cutoff radius beyond the domain: the remainder is gone everywhere
    big = GeneratingFunctionMap(truncate_generating(S, 10.0))
    Z = np.column_stack([np.linspace(0, 1, 11, endpoint=False), np.linspace(-1, 1, 11)])
    assert np.allclose(big(Z), twist(Z), rtol=0, atol=1e-15)


def test_truncation_error_scales_like_delta_power():
    D = 3
    s = FourierPoly.cosine((1,), (D + 1,), 0.5)
    S = GeneratingFunction(GOLDEN, Polynomial(1, {(2,): 0.5}), s)
    f = GeneratingFunctionMap(S)
    deltas = [0.2, 0.1, 0.05, 0.025]
    sups = []
    th = np.arange(64) / 64
    for d in deltas:
        r = np.linspace(-2 * d, 2 * d, 81)
        Z = np.array([[a, b] for a in th for b in r])
        diff = GeneratingFunctionMap(truncate_generating(S, d))(Z) - f(Z)
        diff[:, 0] -= np.round(diff[:, 0])
        sups.append(np.abs(diff).max())
    assert loglog_slope(deltas, sups) >= D - 0.5


def test_elliptic_rescale_frequency():
    nf = EllipticNormalForm([0.3], [[1.0]])
    s = 10**7
    rt = elliptic_rescale(nf, s)
    eps = s ** (-3 / 7)
    assert abs(rt.alpha_tilde[0] - ((0.3 + eps**2) % 1.0)) < 1e-12
    assert rt.residual_order == "O(s^(-1/7))"


def test_elliptic_rescale_degenerate():
    with pytest.raises(DegenerateTwist):
        elliptic_rescale(EllipticNormalForm([0.1, 0.2], [[1, 1], [1, 1]]), 100)


def test_elliptic_rescale_composition():
    nf = EllipticNormalForm([0.123, 0.4], [[1.0, 0.2], [0.2, 0.5]])
    rt = elliptic_rescale(nf, 5)
    z = np.array([[0.1, 0.7, 0.03, -0.02]])
    a = Iterate(rt.step, 5)(z)
    b = rt.iterate(z)
    d = a - b
    d[:, :2] -= np.round(d[:, :2])
    assert np.max(np.abs(d)) < 1e-14


def test_shear_s4():
    sh = shear_to_rotation((1,), 4)
    assert sh.eps == 2
    assert np.array_equal(sh.M, [[-1, 1], [-2, 1]])
    assert np.allclose(sorted(np.linalg.eigvals(sh.M), key=np.imag), [-1j, 1j])
    assert is_identity_exact(sh.exact_power(4))
    assert not is_identity_exact(sh.exact_power(2))


def test_shear_s6_trace():
    sh = shear_to_rotation((1,), 6)
    assert sh.eps == 1 and np.trace(sh.M) == 1
    assert is_identity_exact(sh.exact_power(6))


def test_shear_s3_two_blocks():
    sh = shear_to_rotation((1, -1), 3)
    M = sh.M
    # coupling only within the pairs (x_i, y_i)
    for i in range(2):
        for j in range(2):
            if i != j:
                assert M[i, j] == M[i, 2 + j] == M[2 + i, j] == M[2 + i, 2 + j] == 0
    assert is_identity_exact(sh.exact_power(3))
    assert symplectic_defect_exact(sh.exact) == 0


def test_shear_irrational_order():
    sh = shear_to_rotation((1,), 5)
    assert sh.exact is None
    assert np.allclose(np.linalg.matrix_power(sh.M, 5), np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        shear_to_rotation((1,), 2)
