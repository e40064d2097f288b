"""Explicit high-emergence construction on ``T^n x [0,1]^n``.

Pipeline
--------
1. :func:`build_boxes` lays out target boxes ``C_j``, horizontal strips
   ``B_{q,p}`` inside the annuli ``A_p = T^n x Y_p``.
2. :func:`build_phi` finds a colouring ``Phi: Q x P -> J`` whose two spreading
   properties are verified exhaustively.
3. :func:`build_rearrangement` realizes the relocation of each ``B_{q,p}`` into
   ``C_{Phi(q,p)}`` as an exact cell permutation ``H`` of a product grid.
4. :func:`conjugated_twist` forms ``g = H o G^t o H^{-1}`` with the twist flow
   ``G^t(theta, y) = (theta + t y, y)`` on the invariant core.
5. :func:`atom_separation` and :func:`lower_bound_experiment` measure the
   separation of the model statistics and the resulting emergence bounds.

All box geometry is exact (:class:`fractions.Fraction`).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    CapacityOverflow,
    ConstructionFailure,
    InfeasibleGeometry,
    OutsideCoreRegion,
    ResolutionMismatch,
)
from .maps import Chart, Conjugate, GridPermutation, SymplecticMap, register
from .measures import (
    DiscreteMeasure,
    EmergenceEstimator,
    _measure_from_cells,
    cost_matrix,
    distance_matrix,
)
from .util import make_rng

# ---------------------------------------------------------------------------
# boxes


def m_formula(n, k):
    """``floor((2 k^{2n})^{-1/(4n)} exp(k^{2n} / (20 n)))``; ``None`` when it exceeds 10^18."""
    logm = -math.log(2 * k ** (2 * n)) / (4 * n) + k ** (2 * n) / (20 * n)
    if logm > math.log(1e18):
        return None
    return int(math.floor(math.exp(logm)))


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass
class BoxFamily:
    """Index sets and exact geometry of the construction.

    Indices are 1-based tuples: ``j`` has ``2n`` entries in ``1..k``; ``q`` has
    ``n-1`` entries in ``1..k^2`` and a last entry in ``1..k^2/2``; ``p`` has
    ``n`` entries in ``1..M``.  Lists ``J``, ``Q``, ``P`` fix a flat order.
    """

    n: int
    k: int
    eta: Fraction
    M: int
    M_formula: int | None
    M_cap: int
    M_note: str
    J: list = field(repr=False)
    Q: list = field(repr=False)
    P: list = field(repr=False)

    @property
    def periodic(self):
        return np.array([True] * self.n + [False] * self.n)

    def C_box(self, j):
        k = self.k
        return [(Fraction(3 * ji - 2, 3 * k), Fraction(3 * ji - 1, 3 * k)) for ji in j]

    def centre(self, j):
        return np.array([(ji - 0.5) / self.k for ji in j])

    def Y(self, p):
        M = self.M
        return [(Fraction(28 * pi - 15, 28 * M), Fraction(28 * pi - 13, 28 * M)) for pi in p]

    def B_box(self, q, p):
        k2, eta = self.k**2, self.eta
        theta = [((qi - 1 + eta) / k2, (qi - eta) / k2) for qi in q[:-1]]
        theta.append(((2 * q[-1] - 2 + eta) / k2, (2 * q[-1] - eta) / k2))
        return theta + self.Y(p)

    def V(self):
        return (Fraction(1, 2 * self.M), 1 - Fraction(1, 2 * self.M))

    @staticmethod
    def volume(box):
        v = Fraction(1)
        for lo, hi in box:
            v *= hi - lo
        return v

    def to_config(self):
        return {
            "n": self.n,
            "k": self.k,
            "eta": str(self.eta),
            "M": self.M,
            "M_formula": -1 if self.M_formula is None else self.M_formula,
            "M_cap": self.M_cap,
            "M_note": self.M_note,
        }


def _intervals_disjoint(intervals):
    s = sorted(intervals)
    return all(s[i][1] < s[i + 1][0] for i in range(len(s) - 1))


def build_boxes(n, k, eta, M_cap=8, M=None):
    """Build and verify the box family.

    Parameters
    ----------
    n : int
        Half dimension.
    k : int
        Even, at least 2.
    eta : Fraction or float
        Strip margin, in ``(0, 1/4)``.
    M_cap : int
        Desk-scale size of each ``P`` axis.  The formula value is recorded on
        the family; it is used only when explicitly requested through ``M``.
    M : int, optional
        Override for the number of annuli per axis.

    Raises
    ------
    InfeasibleGeometry
        If ``eta`` is outside ``(0, 1/4)`` or a disjointness check fails.
    """
    n, k = int(n), int(k)
    if k < 2 or k % 2:
        raise ValueError("k must be even and at least 2")
    if M_cap < 2:
        raise ValueError("M_cap must be at least 2")
    eta = _as_fraction(eta)
    if not (0 < eta < Fraction(1, 4)):
        raise InfeasibleGeometry(f"eta = {eta} outside (0, 1/4): strip margins overlap the strip width budget")
    formula = m_formula(n, k)
    if M is None:
        M = M_cap
        if formula is None or formula > M_cap:
            note = "capped: formula value exceeds M_cap"
        else:
            note = f"desk value M_cap used; formula gives {formula}"
    else:
        note = "explicit"
    J = list(itertools.product(range(1, k + 1), repeat=2 * n))
    Q = list(itertools.product(*([range(1, k * k + 1)] * (n - 1) + [range(1, k * k // 2 + 1)])))
    P = list(itertools.product(range(1, M + 1), repeat=n))
    fam = BoxFamily(n, k, eta, int(M), formula, int(M_cap), note, J, Q, P)
    if 2 * len(Q) != len(J):
        raise InfeasibleGeometry("#Q != #J / 2")
    # C boxes: disjoint along every axis for distinct indices
    c_axis = [fam.C_box((ji,) * (2 * n))[0] for ji in range(1, k + 1)]
    if not _intervals_disjoint(c_axis):
        raise InfeasibleGeometry("target boxes overlap")
    # B boxes: theta factors disjoint for distinct q, Y factors for distinct p
    for i in range(n):
        ivs = {b[i] for b in (fam.B_box(q, P[0]) for q in Q)}
        if not _intervals_disjoint(list(ivs)):
            raise InfeasibleGeometry("strips overlap")
    ys = [fam.Y((pi,) * n)[0] for pi in range(1, M + 1)]
    if not _intervals_disjoint(ys):
        raise InfeasibleGeometry("annuli overlap")
    # containment in the phase space and in the annulus A_p
    for q in Q:
        for lo, hi in fam.B_box(q, P[0])[:n]:
            if not (0 <= lo < hi <= 1):
                raise InfeasibleGeometry("strip leaves the torus factor")
    if not (0 <= ys[0][0] and ys[-1][1] <= 1):
        raise InfeasibleGeometry("annulus leaves [0, 1]")
    return fam


# ---------------------------------------------------------------------------
# colouring


@dataclass
class PhiVerification:
    """Exhaustive check of the two spreading properties."""

    max_fibre: int
    fibre_bound: Fraction
    property1: bool
    max_overlap: int
    overlap_bound: Fraction
    property2: bool
    worst_pair: tuple | None

    @property
    def passed(self):
        return self.property1 and self.property2

    def violated(self):
        out = []
        if not self.property1:
            out.append(f"property (1): a colour is used {self.max_fibre} times > (3/4)#P = {self.fibre_bound}")
        if not self.property2:
            out.append(
                f"property (2): rows {self.worst_pair} share {self.max_overlap} pairs >= (3/4)#Q = {self.overlap_bound}"
            )
        return out


def verify_phi(family, table):
    """Check both properties of a colouring table of shape ``(#Q, #P)`` (flat ``J`` indices)."""
    table = np.asarray(table)
    nQ, nP = len(family.Q), len(family.P)
    nJ = len(family.J)
    if table.shape != (nQ, nP):
        raise ValueError("table shape must be (#Q, #P)")
    fib = np.bincount(table.ravel(), minlength=nJ)
    b1 = Fraction(3, 4) * nP
    p1 = bool(np.all(fib <= b1))
    counts = np.zeros((nP, nJ), dtype=np.int64)
    for p in range(nP):
        counts[p] = np.bincount(table[:, p], minlength=nJ)
    ov = counts @ counts.T
    np.fill_diagonal(ov, -1)
    b2 = Fraction(3, 4) * nQ
    if nP > 1:
        flat = int(np.argmax(ov))
        worst = divmod(flat, nP)
        mo = int(ov[worst])
    else:
        worst, mo = None, 0
    p2 = mo < b2
    return PhiVerification(int(fib.max()), b1, p1, mo, b2, bool(p2), worst)


@dataclass
class ColoringMap:
    """Verified colouring; ``table[q, p]`` is the flat index of ``Phi(q, p)`` in ``family.J``."""

    table: np.ndarray
    k: int
    n: int
    seed: int
    method: str
    attempts: int
    verification: PhiVerification

    def colour(self, qi, pi):
        return int(self.table[qi, pi])

    def to_config(self):
        return {
            "k": self.k,
            "n": self.n,
            "seed": self.seed,
            "method": self.method,
            "table": self.table.tolist(),
        }


def _greedy_phi(nQ, nP, nJ):
    table = np.zeros((nQ, nP), dtype=np.int64)
    counts = np.zeros((nP, nJ), dtype=np.int64)
    fib = np.zeros(nJ, dtype=np.int64)
    for p in range(nP):
        overlap = np.zeros(p, dtype=np.int64)
        used = np.zeros(nJ, bool)
        for q in range(nQ):
            best, key = None, None
            for j in range(nJ):
                if used[j]:
                    continue
                worst = int((overlap + counts[:p, j]).max()) if p else 0
                cand = (worst, int(fib[j]), j)
                if key is None or cand < key:
                    best, key = j, cand
            table[q, p] = best
            used[best] = True
            overlap += counts[:p, best]
            fib[best] += 1
        counts[p] = np.bincount(table[:, p], minlength=nJ)
    return table


def build_phi(family, seed=0, attempts=2000):
    """Colouring with both spreading properties, verified exhaustively.

    Tries seeded uniform maps with injective rows (each ``p`` uses distinct
    colours), then a greedy max-spread assignment.

    Raises
    ------
    ConstructionFailure
        With the violated properties when nothing verifies.
    """
    nQ, nP, nJ = len(family.Q), len(family.P), len(family.J)
    rng = make_rng(seed)
    last = None
    for a in range(1, attempts + 1):
        table = np.stack([rng.permutation(nJ)[:nQ] for _ in range(nP)], axis=1)
        ver = verify_phi(family, table)
        if ver.passed:
            return ColoringMap(table, family.k, family.n, seed, "rejection", a, ver)
        last = ver
    table = _greedy_phi(nQ, nP, nJ)
    ver = verify_phi(family, table)
    if ver.passed:
        return ColoringMap(table, family.k, family.n, seed, "greedy", attempts, ver)
    violated = ver.violated() or (last.violated() if last else [])
    raise ConstructionFailure(
        f"no colouring found for k={family.k}, n={family.n}, #P={nP} "
        f"(below the large-k regime where the colouring is known to exist)",
        violated,
    )


# ---------------------------------------------------------------------------
# volume accounting


@dataclass
class VolumeReport:
    max_fibre_volume: Fraction
    target_volume: Fraction
    strip_union_bound: Fraction
    passed: bool
    total_target_volume: Fraction


def volume_check(family, phi):
    """Exact volume of the union of strips coloured ``j``, against ``Leb C_j``."""
    n, k = family.n, family.k
    vols = {}
    for qi, q in enumerate(family.Q):
        for pi, p in enumerate(family.P):
            j = int(phi.table[qi, pi])
            vols[j] = vols.get(j, Fraction(0)) + family.volume(family.B_box(q, p))
    target = Fraction(1, (3 * k) ** (2 * n))
    worst = max(vols.values()) if vols else Fraction(0)
    bound = Fraction(3, 2) / (14**n * k ** (2 * n))
    total = sum((family.volume(family.C_box(j)) for j in family.J), Fraction(0))
    return VolumeReport(worst, target, bound, worst < target, total)


# ---------------------------------------------------------------------------
# twist flow


@register("twist_flow")
@dataclass(frozen=True, eq=False)
class TwistFlow(SymplecticMap):
    """Time-``t`` map of the twist flow on the invariant core ``T^n x V``.

    ``V = [1/(2M), 1 - 1/(2M)]^n``; points outside the core raise
    :class:`OutsideCoreRegion` because the cutoff tails are not modelled.
    """

    t: float
    M: int
    n: int = 1
    chart: Chart = field(default=Chart.TORUS_ANNULUS, init=False)
    has_analytic_jacobian = True

    @property
    def V(self):
        return 1.0 / (2 * self.M), 1.0 - 1.0 / (2 * self.M)

    def _evaluate(self, z):
        n = self.n
        y = z[:, n:]
        lo, hi = self.V
        if np.any((y < lo - 1e-12) | (y > hi + 1e-12)):
            raise OutsideCoreRegion("action outside the invariant core T^n x V")
        out = z.copy()
        out[:, :n] = z[:, :n] + self.t * y
        return out

    def _jacobian(self, z):
        n = self.n
        J = np.tile(np.eye(2 * n), (len(z), 1, 1))
        J[:, :n, n:] = self.t * np.eye(n)
        return J

    def power(self, m):
        return TwistFlow(self.t * m, self.M, self.n)

    def to_config(self):
        return {"type": self.kind, "t": float(self.t), "M": int(self.M), "n": int(self.n)}

    @classmethod
    def from_config(cls, d):
        return cls(float(d["t"]), int(d["M"]), int(d.get("n", 1)))


def twist_time_t(spec, z):
    """``(theta + t y mod 1, y)`` on the core."""
    return spec(z)


# ---------------------------------------------------------------------------
# rearrangement


def base_resolution(family):
    """Smallest per-axis cell counts making every box a union of whole cells."""
    n, k = family.n, family.k
    dens_theta = {3 * k}
    for q in family.Q[:1] + family.Q[-1:]:
        for lo, hi in family.B_box(q, family.P[0])[:n]:
            dens_theta.update({lo.denominator, hi.denominator})
    eta = family.eta
    dens_theta.update({((1 + eta) / k**2).denominator, ((2 + eta) / k**2).denominator})
    dens_y = {3 * k, 28 * family.M, 2 * family.M}
    N_theta = math.lcm(*dens_theta)
    N_y = math.lcm(*dens_y)
    return (N_theta,) * n + (N_y,) * n


def _cells_of_box(box, shape):
    ranges = []
    for (lo, hi), N in zip(box, shape):
        a, b = lo * N, hi * N
        if a.denominator != 1 or b.denominator != 1:
            raise ResolutionMismatch(f"box edge {lo} or {hi} not on the grid of {N} cells")
        ranges.append(np.arange(int(a), int(b)))
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.ravel_multi_index(tuple(g.ravel() for g in grids), shape)


@dataclass
class Rearrangement:
    """Cell permutation ``H`` with its accounting.

    ``containment[(qi, pi)]`` is the fraction of the strip's cells sent into
    its target box; ``boundary_fixed`` confirms ``H`` is the identity on the
    cells touching ``y = 0`` and ``y = 1``.
    """

    H: GridPermutation
    shape: tuple
    strip_cells: int
    target_cells: int
    containment_min: float
    boundary_fixed: bool
    used_slots: dict


def build_rearrangement(family, phi, grid_res=None, max_cells=20_000_000):
    """Exact cell permutation sending each strip into its target box.

    Parameters
    ----------
    grid_res : tuple of int, optional
        Cells per axis; defaults to :func:`base_resolution`.  Must make every
        box a union of whole cells.

    Raises
    ------
    ResolutionMismatch
        Grid not aligned with the boxes, or too many cells.
    CapacityOverflow
        A target box is too small for its strips (volume-count violation).
    """
    shape = tuple(base_resolution(family) if grid_res is None else grid_res)
    ncell = int(np.prod(shape))
    if ncell > max_cells:
        raise ResolutionMismatch(f"grid of {ncell} cells exceeds the cap {max_cells}")
    slots = {}
    pointer = {}
    perm = np.arange(ncell, dtype=np.int64)
    src_all, dst_all = [], []
    strip_cells = None
    for pi, p in enumerate(family.P):
        for qi, q in enumerate(family.Q):
            j = int(phi.table[qi, pi])
            if j not in slots:
                slots[j] = _cells_of_box(family.C_box(family.J[j]), shape)
                pointer[j] = 0
            src = _cells_of_box(family.B_box(q, p), shape)
            strip_cells = len(src)
            a = pointer[j]
            if a + len(src) > len(slots[j]):
                raise CapacityOverflow(f"target box {family.J[j]} cannot hold its strips")
            src_all.append(src)
            dst_all.append(slots[j][a : a + len(src)])
            pointer[j] = a + len(src)
    S = np.concatenate(src_all)
    T = np.concatenate(dst_all)
    perm[S] = T
    in_S = np.zeros(ncell, bool)
    in_S[S] = True
    in_T = np.zeros(ncell, bool)
    in_T[T] = True
    t_minus_s = np.flatnonzero(in_T & ~in_S)
    s_minus_t = np.flatnonzero(in_S & ~in_T)
    perm[t_minus_s] = s_minus_t
    H = GridPermutation(shape, perm)
    # accounting
    containment = []
    k = 0
    for pi in range(len(family.P)):
        for qi in range(len(family.Q)):
            j = int(phi.table[qi, pi])
            tgt = set(slots[j].tolist())
            img = perm[src_all[k]]
            containment.append(np.mean([c in tgt for c in img.tolist()]))
            k += 1
    idx = np.stack(np.unravel_index(np.arange(ncell), shape), axis=-1)
    n = family.n
    edge = np.any((idx[:, n:] == 0) | (idx[:, n:] == np.asarray(shape[n:]) - 1), axis=1)
    boundary_fixed = bool(np.all(perm[edge] == np.flatnonzero(edge)))
    return Rearrangement(
        H=H,
        shape=shape,
        strip_cells=int(strip_cells),
        target_cells=int(len(next(iter(slots.values())))),
        containment_min=float(min(containment)),
        boundary_fixed=boundary_fixed,
        used_slots={family.J[j]: int(v) for j, v in pointer.items()},
    )


def conjugated_twist(H, t, M, n=1):
    """``g = H o G^t o H^{-1}``."""
    return Conjugate(TwistFlow(float(t), int(M), int(n)), H)


def conjugated_orbit(H, t, w, n_iter):
    """Points ``g^i(H(w)) = H(G^{i t}(w))`` for ``i < n_iter`` and rows of ``w``.

    Returns an array of shape ``(n_iter, len(w), 2n)``.
    """
    w = np.atleast_2d(np.asarray(w, float))
    n = w.shape[1] // 2
    steps = np.arange(n_iter)[:, None, None]
    theta = w[None, :, :n] + t * steps * w[None, :, n:]
    y = np.broadcast_to(w[None, :, n:], theta.shape)
    pts = np.concatenate([np.mod(theta, 1.0), y], axis=-1)
    flat = pts.reshape(-1, 2 * n)
    return H(flat).reshape(pts.shape)


# ---------------------------------------------------------------------------
# separation of the model statistics


def model_measures(family, phi):
    """``mu_p``: uniform on the centres of the target boxes coloured by row ``p``."""
    out = []
    for pi in range(len(family.P)):
        pts = np.array([family.centre(family.J[int(j)]) for j in phi.table[:, pi]])
        out.append(DiscreteMeasure.uniform(pts, family.periodic))
    return out


@dataclass
class SeparationReport:
    minimum: float
    pair: tuple | None
    bound: float
    passed: bool
    centre_gap: float
    distances: np.ndarray = field(repr=False)


def atom_separation(family, phi):
    """Minimum exact distance between the model statistics of distinct ``p``."""
    mus = model_measures(family, phi)
    D = distance_matrix(mus)
    nP = len(mus)
    bound = 1.0 / (4 * family.k)
    centres = np.array([family.centre(j) for j in family.J])
    C = cost_matrix(centres, centres, family.periodic)
    np.fill_diagonal(C, np.inf)
    if nP < 2:
        return SeparationReport(np.inf, None, bound, True, float(C.min()), D)
    off = D + np.diag(np.full(nP, np.inf))
    flat = int(np.argmin(off))
    pair = divmod(flat, nP)
    m = float(off[pair])
    return SeparationReport(m, pair, bound, m >= bound - 1e-12, float(C.min()), D)


def subset_cover_minimum(D, m):
    """Minimal transport cost from the uniform measure on the points of ``D`` to
    measures supported on ``m`` of those points (exhaustive over subsets)."""
    P = len(D)
    best = np.inf
    for sub in itertools.combinations(range(P), m):
        best = min(best, float(D[:, list(sub)].min(axis=1).mean()))
    return best


def eq44_checks(family):
    """The two margin inequalities tying ``eta`` to ``k``, and the largest dyadic ``eta`` meeting both."""
    n, k = family.n, family.k
    eta = float(family.eta)
    nQ = len(family.Q)
    target = 1 - 1 / (60 * k)

    def ok(e):
        return ((1 - 2 * e) ** n * (1 - math.sqrt(e)) > target), (1 - nQ * math.sqrt(e) > target)

    a, b = ok(eta)
    e = 0.5
    while not all(ok(e)) and e > 1e-300:
        e /= 2
    return {"strip_margin": a, "annulus_margin": b, "largest_dyadic_eta": e}


@dataclass
class LowerBoundReport:
    """Every hypothesis and measurement of the emergence experiment."""

    eps: float
    lower: int
    upper: int
    P_over_10: float
    lower_ge_P_over_10: bool
    exp_bound: float
    lower_ge_exp_bound: bool
    mu_packing: int
    visit_min: float
    visit_bound: float
    visit_ci: float
    hypotheses: dict
    samples: int
    n_iter: int
    t: float

    def records(self):
        d = dict(self.__dict__)
        d["hypotheses"] = dict(self.hypotheses)
        return d


def _greedy_packing(D, sep):
    chosen = []
    for i in range(len(D)):
        if all(D[i, c] >= sep for c in chosen):
            chosen.append(i)
    return len(chosen)


def lower_bound_experiment(
    family,
    phi,
    rearrangement,
    t=0.3,
    samples_per_p=4,
    n_iter=10_000,
    eps_factor=1.0,
    tau=1.0,
    seed=0,
    workers=1,
):
    """Sample orbits of ``g`` from ``H(A_p)``, build the ensemble, bound the emergence.

    Samples ``w`` have ``theta`` uniform and ``y`` uniform in ``Y_p`` clipped to
    the invariant core; the statistic of ``H(w)`` is binned on the partition of
    side ``1/(3k)``, whose cells include the target boxes.
    """
    n, k = family.n, family.k
    H = rearrangement.H
    rng = make_rng(seed)
    vlo, vhi = (float(v) for v in family.V())
    W, owners = [], []
    for pi, p in enumerate(family.P):
        Y = family.Y(p)
        lo = np.array([max(float(a), vlo) for a, _ in Y])
        hi = np.array([min(float(b), vhi) for _, b in Y])
        for _ in range(samples_per_p):
            theta = rng.random(n)
            y = lo + (hi - lo) * rng.random(n)
            W.append(np.concatenate([theta, y]))
            owners.append(pi)
    W = np.array(W)
    cell = 1.0 / (3 * k)
    mask = family.periodic
    measures = []
    visit = []
    eta = float(family.eta)
    k2 = k * k
    for s, w in enumerate(W):
        orbit = conjugated_orbit(H, t, w[None, :], n_iter)[:, 0, :]
        cells = np.floor(orbit / cell).astype(np.int64)
        cells[:, :n] = np.mod(cells[:, :n], 3 * k)
        cells[:, n:] = np.clip(cells[:, n:], 0, 3 * k - 1)
        measures.append(_measure_from_cells(cells, cell, mask))
        # visits of the untransformed orbit to each strip of its annulus
        theta = np.mod(w[:n][None, :] + t * np.arange(n_iter)[:, None] * w[n:][None, :], 1.0)
        if n == 1:
            u = theta[:, 0] * k2
            qn = np.floor(u / 2).astype(np.int64)
            frac = u - 2 * qn
            inside = (frac >= eta) & (frac <= 2 - eta)
            counts = np.bincount(qn[inside], minlength=k2 // 2)[: k2 // 2]
            visit.append(counts.min() / n_iter)
    order = np.lexsort(W.T[::-1])
    start = int(order[0])
    D = distance_matrix(measures, workers)
    est = EmergenceEstimator(D, start=start)
    eps = eps_factor / (40 * k)
    lo, hi = est.at_scale(eps)
    mus = model_measures(family, phi)
    Dm = distance_matrix(mus)
    packing = _greedy_packing(Dm, 0.9 / (4 * k))
    nP = len(family.P)
    visit_bound = 2 * (1 - 2 * eta) ** n * (1 - math.sqrt(eta)) / k ** (2 * n)
    vmin = float(min(visit)) if visit else float("nan")
    ci = 1.96 * math.sqrt(max(vmin * (1 - vmin), 0.0) / n_iter) if visit else float("nan")
    exp_bound = math.exp(eps ** (-tau)) if eps ** (-tau) < 700 else math.inf
    hyp = dict(eq44_checks(family))
    hyp["lemma_phi"] = phi.verification.passed
    hyp["volume_count"] = volume_check(family, phi).passed
    hyp["separation"] = atom_separation(family, phi).passed
    hyp["M_note"] = family.M_note
    hyp["tau_below_2n"] = tau < 2 * n
    return LowerBoundReport(
        eps=eps,
        lower=int(lo),
        upper=int(hi),
        P_over_10=nP / 10,
        lower_ge_P_over_10=lo >= nP / 10,
        exp_bound=exp_bound,
        lower_ge_exp_bound=lo >= exp_bound,
        mu_packing=packing,
        visit_min=vmin,
        visit_bound=visit_bound,
        visit_ci=ci,
        hypotheses=hyp,
        samples=len(W),
        n_iter=int(n_iter),
        t=float(t),
    )
