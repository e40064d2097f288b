from fractions import Fraction

import numpy as np
import pytest

from symplab.construction import (
    ColoringMap,
    TwistFlow,
    atom_separation,
    build_boxes,
    build_phi,
    build_rearrangement,
    conjugated_orbit,
    conjugated_twist,
    eq44_checks,
    lower_bound_experiment,
    model_measures,
    subset_cover_minimum,
    twist_time_t,
    verify_phi,
    volume_check,
)
from symplab.errors import ConstructionFailure, InfeasibleGeometry, OutsideCoreRegion
from symplab.maps import AffineChart, GridPermutation, iterate_orbit
from symplab.measures import distance_matrix, empirical_measure, kw_exact, transport_vertex_minimum
from symplab.normalform import GOLDEN

ETA = Fraction(1, 16)


@pytest.fixture(scope="module")
def k4():
    fam = build_boxes(1, 4, ETA, M_cap=8)
    return fam, build_phi(fam, seed=0)


def test_boxes_k2_counts_and_geometry():
    fam = build_boxes(1, 2, ETA)
    assert len(fam.J) == 4 and len(fam.Q) == 2 and len(fam.P) == 8
    assert fam.C_box((1, 2)) == [(Fraction(1, 6), Fraction(1, 3)), (Fraction(2, 3), Fraction(5, 6))]
    assert fam.M == 8 and "M_cap" in fam.M_note


def test_boxes_reject_wide_margin():
    with pytest.raises(InfeasibleGeometry):
        build_boxes(1, 2, 0.3)
    with pytest.raises(ValueError):
        build_boxes(1, 3, ETA)


@pytest.mark.parametrize("n,k", [(1, 2), (1, 4), (2, 2)])
def test_target_volume_total(n, k):
    fam = build_boxes(n, k, ETA, M_cap=2)
    total = sum((fam.volume(fam.C_box(j)) for j in fam.J), Fraction(0))
    assert total == Fraction(1, 3 ** (2 * n))
    assert 2 * len(fam.Q) == len(fam.J)


def test_strips_inside_their_annulus():
    fam = build_boxes(1, 4, ETA, M_cap=4)
    for p in fam.P:
        Yp = fam.Y(p)
        for q in fam.Q:
            B = fam.B_box(q, p)
            assert B[1] == Yp[0] and 0 <= B[0][0] < B[0][1] <= 1


def test_single_annulus():
    fam = build_boxes(1, 4, ETA, M=1)
    assert len(fam.P) == 1
    # a balanced table has no pair condition to meet, but every used colour
    # has a fibre of 1 > (3/4) #P, so the fibre property cannot hold
    table = np.arange(len(fam.Q))[:, None]
    v = verify_phi(fam, table)
    assert v.property2 and v.worst_pair is None
    assert not v.property1
    with pytest.raises(ConstructionFailure):
        build_phi(fam, seed=3, attempts=10)


def test_k4_colouring_exhaustive(k4):
    fam, phi = k4
    v = verify_phi(fam, phi.table)
    assert v.passed and v.max_fibre <= Fraction(3, 4) * len(fam.P)
    # brute-force the pair property directly
    for a in range(len(fam.P)):
        for b in range(len(fam.P)):
            if a != b:
                shared = sum(phi.table[q, a] == phi.table[r, b] for q in range(len(fam.Q)) for r in range(len(fam.Q)))
                assert shared < Fraction(3, 4) * len(fam.Q)


def test_constant_colouring_rejected(k4):
    fam, _ = k4
    v = verify_phi(fam, np.zeros((len(fam.Q), len(fam.P)), dtype=int))
    assert not v.property1 and not v.passed and v.violated()


def test_k2_cannot_be_coloured():
    fam = build_boxes(1, 2, ETA)
    with pytest.raises(ConstructionFailure) as info:
        build_phi(fam, seed=0, attempts=50)
    assert info.value.violated


def test_volume_count(k4):
    fam, phi = k4
    rep = volume_check(fam, phi)
    assert rep.passed and rep.max_fibre_volume <= rep.strip_union_bound < rep.target_volume


def test_twist_flow():
    G0 = TwistFlow(0.0, 8)
    z = np.array([[0.3, 0.4]])
    assert np.array_equal(twist_time_t(G0, z), z)
    G = TwistFlow(1.0, 8)
    o = iterate_orbit(G, np.array([0.1, 0.25]), 4)
    assert np.allclose(o[4], o[0]) and not np.allclose(o[2], o[0])
    with pytest.raises(OutsideCoreRegion):
        G(np.array([[0.1, 0.01]]))


def test_twist_golden_action_equidistributes():
    mu = empirical_measure(TwistFlow(1.0, 8), [0.0, GOLDEN], n_iter=100_000, cell=1 / 64)
    theta_cells = mu.points[:, 0]
    assert len(theta_cells) == 64
    assert 0.5 * np.abs(mu.weights - 1 / 64).sum() < 2e-3


def test_rearrangement_k2_accounting():
    fam = build_boxes(1, 2, ETA, M_cap=2)
    table = np.array([[0, 1], [2, 3]])  # injective colouring
    phi = ColoringMap(table, 2, 1, 0, "manual", 0, verify_phi(fam, table))
    rep = build_rearrangement(fam, phi)
    assert rep.containment_min == 1.0 and rep.boundary_fixed
    assert rep.strip_cells <= rep.target_cells
    H = rep.H
    n = int(np.prod(H.shape))
    assert np.array_equal(H.inverse().perm[H.perm], np.arange(n))
    assert np.array_equal(np.sort(H.perm), np.arange(n))


def test_rearrangement_k4(k4):
    fam, phi = k4
    rep = build_rearrangement(fam, phi)
    assert rep.containment_min >= 1 - float(ETA) and rep.boundary_fixed
    # each target holds at most its own cell count
    assert max(rep.used_slots.values()) <= rep.target_cells


def test_conjugated_twist_by_identity_chart():
    perm = GridPermutation((4, 16), np.arange(64))
    g = conjugated_twist(perm, 0.3, 8)
    G = TwistFlow(0.3, 8)
    z = np.array([[0.1, 0.3], [0.77, 0.6]])
    assert np.allclose(g(z), G(z), atol=1e-12)
    o = conjugated_orbit(perm, 0.3, z, 5)
    assert np.allclose(o[1], G(z), atol=1e-12)
    assert AffineChart(np.eye(2)).conformal_factor == 1.0


def test_conjugated_orbit_matches_three_step_composition(k4):
    fam, phi = k4
    H = build_rearrangement(fam, phi).H
    w = np.array([[0.2, 0.5 + 1 / 56]])
    g = conjugated_twist(H, 0.3, fam.M)
    o = conjugated_orbit(H, 0.3, w, 3)
    z = H(w)
    for i in range(3):
        assert np.allclose(o[i], z, atol=1e-12)
        z = g(z)


def test_separation_bound(k4):
    fam, phi = k4
    rep = atom_separation(fam, phi)
    assert rep.passed and rep.minimum >= 1 / 16 - 1e-12
    assert rep.centre_gap >= 1 / 4 - 1e-12
    mus = model_measures(fam, phi)
    a, b = rep.pair
    if max(mus[a].size, mus[b].size) <= 4:
        assert rep.minimum == pytest.approx(transport_vertex_minimum(mus[a], mus[b]), abs=1e-9)


def test_identical_rows_have_zero_separation(k4):
    fam, phi = k4
    table = phi.table.copy()
    table[:, 1] = table[:, 0]
    bad = ColoringMap(table, 4, 1, 0, "manual", 0, verify_phi(fam, table))
    assert not bad.verification.property2
    rep = atom_separation(fam, bad)
    assert rep.minimum == 0.0 and not rep.passed
    mus = model_measures(fam, bad)
    assert kw_exact(mus[0], mus[1]) == 0.0


def test_few_atom_approximation_is_far(k4):
    fam, phi = k4
    D = distance_matrix(model_measures(fam, phi))
    m = max(1, len(fam.P) // 10)
    assert subset_cover_minimum(D, m) > 0.9 / (4 * fam.k) * (1 - m / len(fam.P))


def test_lower_bound_experiment_desk(k4):
    fam, phi = k4
    rear = build_rearrangement(fam, phi)
    rep = lower_bound_experiment(fam, phi, rear, t=0.3, samples_per_p=2, n_iter=2000)
    assert rep.lower >= rep.P_over_10 and rep.lower_ge_P_over_10
    assert rep.lower <= rep.upper
    assert rep.mu_packing >= 1
    assert rep.hypotheses["lemma_phi"] and rep.hypotheses["volume_count"] and rep.hypotheses["separation"]


def test_margin_inequalities_flagged_not_asserted(k4):
    fam, phi = k4
    checks = eq44_checks(fam)
    # at k = 4 the strip-count inequality needs a far smaller margin than 1/16
    assert checks["annulus_margin"] is False
    assert checks["largest_dyadic_eta"] < float(ETA)
    rear = build_rearrangement(fam, phi)
    rep = lower_bound_experiment(fam, phi, rear, t=0.3, samples_per_p=1, n_iter=500)
    assert rep.hypotheses["annulus_margin"] is False
