"""Discrete measures, Kantorovich-Wasserstein distances and emergence estimates.

Ground metric is the max-norm ``d_inf`` with periodic coordinates wrapped.
Exact transport is solved as a linear program (HiGHS through
:func:`scipy.optimize.linprog`); the entropic variant is a log-domain Sinkhorn
iteration whose rounded plan and c-transformed dual potentials bracket the
exact value.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import (
    CapacityOverflow,
    DegenerateCurve,
    EmptyRestriction,
    NonConvergence,
    OrbitEscape,
    SymplabError,
)
from .maps import reduce_torus, wrap_difference
from .util import parallel_map

MAX_ATOMS = 4096


def _mask(periodic, dim):
    if periodic is None:
        return np.zeros(dim, bool)
    m = np.asarray(periodic, bool)
    if m.ndim == 0:
        m = np.full(dim, bool(m))
    return m


class DiscreteMeasure:
    """Finitely supported probability measure.

    Atoms are reduced on periodic coordinates, duplicates are merged and the
    atoms are sorted lexicographically, so two equal measures have identical
    arrays.

    Parameters
    ----------
    points : array_like, shape (m, d)
    weights : array_like, shape (m,)
        Non-negative, summing to 1 within ``tol``.
    periodic : bool or array_like of bool, optional
        Which coordinates live on the unit circle.
    counts : array_like of int, optional
        Integer visit counts behind the weights (empirical measures); merged
        alongside the weights.
    """

    def __init__(self, points, weights, periodic=None, tol=1e-12, counts=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.asarray(weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights differ in length")
        if np.any(w < 0):
            raise ValueError("negative weight")
        if abs(w.sum() - 1.0) > tol:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        self.periodic = _mask(periodic, pts.shape[1])
        pts = reduce_torus(pts, self.periodic)
        uniq, inv = np.unique(pts, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        self.points = uniq
        self.weights = np.bincount(inv, weights=w, minlength=len(uniq))
        self.counts = None
        if counts is not None:
            self.counts = np.bincount(inv, weights=np.asarray(counts), minlength=len(uniq)).astype(np.int64)

    @classmethod
    def dirac(cls, point, periodic=None):
        return cls(np.atleast_2d(point), [1.0], periodic)

    @classmethod
    def uniform(cls, points, periodic=None):
        pts = np.atleast_2d(points)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)), periodic)

    @property
    def size(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.points.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, DiscreteMeasure)
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        return f"DiscreteMeasure(atoms={self.size}, dim={self.dim})"


def cost_matrix(X, Y, periodic):
    """``d_inf`` between every row of ``X`` and every row of ``Y``."""
    d = wrap_difference(X[:, None, :] - Y[None, :, :], periodic)
    return np.max(np.abs(d), axis=-1)


def _same_chart(mu, nu):
    if mu.dim != nu.dim or not np.array_equal(mu.periodic, nu.periodic):
        raise ValueError("measures live on different spaces")


def _transport_lp(a, b, C):
    m, n = C.shape
    rows = np.repeat(np.arange(m), n)
    cols = np.tile(np.arange(n), m)
    idx = np.arange(m * n)
    A = sparse.vstack(
        [
            sparse.csr_matrix((np.ones(m * n), (rows, idx)), shape=(m, m * n)),
            sparse.csr_matrix((np.ones(m * n), (cols, idx)), shape=(n, m * n)),
        ]
    ).tocsr()
    rhs = np.concatenate([a, b])
    res = linprog(C.ravel(), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NonConvergence(f"transport LP failed: {res.message}")
    return res.x.reshape(m, n)


def kw_exact(mu, nu, return_plan=False):
    """Exact Kantorovich-Wasserstein distance with ground metric ``d_inf``.

    Parameters
    ----------
    mu, nu : DiscreteMeasure
        At most 4096 atoms each.
    return_plan : bool
        Also return the optimal plan, shape ``(mu.size, nu.size)``.

    Raises
    ------
    CapacityOverflow
        When a support exceeds the atom cap; use :func:`kw_entropic` instead.
    """
    _same_chart(mu, nu)
    if max(mu.size, nu.size) > MAX_ATOMS:
        raise CapacityOverflow(f"support larger than {MAX_ATOMS} atoms; use kw_entropic")
    C = cost_matrix(mu.points, nu.points, mu.periodic)
    if mu.size == 1 or nu.size == 1:
        plan = np.outer(mu.weights, nu.weights)
    elif mu == nu:
        plan = np.diag(mu.weights)
    else:
        plan = _transport_lp(mu.weights, nu.weights, C)
        plan = np.clip(plan, 0.0, None)
    value = float(np.sum(plan * C))
    value = max(value, 0.0)
    return (value, plan) if return_plan else value


def transport_vertex_minimum(mu, nu):
    """Minimum transport cost over all vertices of the transport polytope.

    Brute-force reference for small supports: every basic feasible solution
    is obtained from a choice of ``m + n - 1`` cells, solved as a square linear
    system (one redundant marginal constraint dropped).
    """
    _same_chart(mu, nu)
    a, b = mu.weights, nu.weights
    m, n = len(a), len(b)
    C = cost_matrix(mu.points, nu.points, mu.periodic).ravel()
    A = np.zeros((m + n, m * n))
    for i in range(m):
        for j in range(n):
            A[i, i * n + j] = 1.0
            A[m + j, i * n + j] = 1.0
    rhs = np.concatenate([a, b])
    k = m + n - 1
    combos = np.array(list(itertools.combinations(range(m * n), k)), dtype=int)
    sub = A[:-1][:, combos].transpose(1, 0, 2)  # (ncomb, k, k)
    det = np.linalg.det(sub)
    ok = np.abs(det) > 0.5  # totally unimodular: determinants are 0 or +-1
    sub, combos = sub[ok], combos[ok]
    x = np.linalg.solve(sub, np.broadcast_to(rhs[:-1], (len(sub), k))[..., None])[..., 0]
    feas = np.all(x >= -1e-12, axis=1)
    full = np.zeros((len(sub), m * n))
    np.put_along_axis(full, combos, x, axis=1)
    feas &= np.all(np.abs(full @ A.T - rhs) <= 1e-12, axis=1)
    costs = full[feas] @ C
    return float(costs.min())


@dataclass(frozen=True)
class EntropicResult:
    """Entropic transport estimate.

    ``value`` is the cost of a feasible plan (an upper bound); ``lower`` is a
    feasible dual value; ``gap = value - lower`` bounds ``|value - kw_exact|``.
    """

    value: float
    gap: float
    lower: float
    iterations: int
    marginal_error: float

    def __iter__(self):
        return iter((self.value, self.gap))


def _lse(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def _round_to_feasible(P, a, b):
    """Project a positive matrix onto the transport polytope of ``(a, b)``."""
    r = P.sum(axis=1)
    P = P * np.minimum(1.0, a / np.where(r > 0, r, 1.0))[:, None]
    c = P.sum(axis=0)
    P = P * np.minimum(1.0, b / np.where(c > 0, c, 1.0))[None, :]
    ea = a - P.sum(axis=1)
    eb = b - P.sum(axis=0)
    s = ea.sum()
    if s > 0:
        P = P + np.outer(ea, eb) / s
    return np.clip(P, 0.0, None)


def kw_entropic(mu, nu, lam=1e-2, iterations=10_000, tol=1e-10, gap_bound=None, cost=None):
    """Entropically regularized transport, with a certified bracket on the exact value.

    Parameters
    ----------
    lam : float
        Regularization strength (same units as the ground metric).
    iterations : int
        Cap on Sinkhorn sweeps.
    tol : float
        Stop once the row-marginal defect is below this.
    gap_bound : float, optional
        Raise :class:`NonConvergence` if the final gap exceeds it.

    Returns
    -------
    EntropicResult
        Unpacks as ``(value, gap)``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    _same_chart(mu, nu)
    a, b = mu.weights, nu.weights
    C = cost_matrix(mu.points, nu.points, mu.periodic) if cost is None else cost
    la, lb = np.log(a), np.log(b)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    err = np.inf
    it = 0
    for it in range(1, iterations + 1):
        f = lam * (la - _lse((g[None, :] - C) / lam, axis=1))
        g = lam * (lb - _lse((f[:, None] - C) / lam, axis=0))
        if it % 10 == 0 or it == iterations:
            rows = np.exp(_lse((f[:, None] + g[None, :] - C) / lam, axis=1))
            err = float(np.abs(rows - a).sum())
            if err < tol:
                break
    P = np.exp((f[:, None] + g[None, :] - C) / lam)
    P = _round_to_feasible(P, a, b)
    upper = float(np.sum(P * C))
    g2 = np.min(C - f[:, None], axis=0)
    f2 = np.min(C - g2[None, :], axis=1)
    lower = float(a @ f2 + b @ g2)
    upper = max(upper, lower)
    gap = upper - lower
    if gap_bound is not None and gap > gap_bound:
        raise NonConvergence(f"duality gap {gap:.3e} above {gap_bound:.3e} after {it} iterations")
    return EntropicResult(upper, gap, lower, it, err)


def kw_upper(mu, nu, exact_limit=65_536):
    """A guaranteed upper bound on ``kw_exact``: exact for small products, entropic otherwise."""
    if mu.size * nu.size <= exact_limit:
        return kw_exact(mu, nu)
    return kw_entropic(mu, nu, lam=1e-3, iterations=500, tol=1e-9).value


# ---------------------------------------------------------------------------
# empirical measures


def _orbit_cells(fmap, Z, n_iter, cell):
    """Visit-cell indices of ``n_iter`` points of every orbit: shape ``(n_iter, S, d)``."""
    mask = fmap.periodic
    per_axis = np.round(1.0 / cell).astype(np.int64)
    idx = np.empty((n_iter,) + Z.shape, dtype=np.int64)
    z = np.array(Z, dtype=float)
    for i in range(n_iter):
        c = np.floor(z / cell).astype(np.int64)
        if np.any(mask):
            c[:, mask] = np.mod(c[:, mask], per_axis)
        idx[i] = c
        if i + 1 < n_iter:
            try:
                z = fmap(z)
            except SymplabError as exc:
                raise OrbitEscape(i + 1, exc) from exc
            if not np.all(np.isfinite(z)):
                raise OrbitEscape(i + 1, "non-finite coordinates")
    return idx


def _measure_from_cells(cells, cell, mask):
    uniq, counts = np.unique(cells, axis=0, return_counts=True)
    n = int(counts.sum())
    return DiscreteMeasure((uniq + 0.5) * cell, counts / n, mask, tol=1e-9, counts=counts)


def empirical_measure(fmap, z, n_iter=10_000, cell=1.0 / 64):
    """Histogram of ``z, f(z), ..., f^{n_iter-1}(z)`` on the uniform partition of side ``cell``.

    Atoms sit at cell centres and weights are visit counts divided by
    ``n_iter`` (the integer counts are kept on ``measure.counts``).  The
    Birkhoff limit is truncated at ``n_iter``.
    """
    z = np.asarray(z, float).reshape(1, -1)
    cells = _orbit_cells(fmap, z, int(n_iter), cell)[:, 0, :]
    return _measure_from_cells(cells, cell, fmap.periodic)


@dataclass
class EmpiricalEnsemble:
    """Empirical measures of sampled initial points sharing one binning.

    ``cauchy`` holds, per sample, an upper bound on the distance between the
    measures at ``n_iter // 2`` and ``n_iter``; ``converged`` flags samples whose
    bound is below ``cauchy_eps``.  Samples are weighted uniformly (Monte-Carlo
    proxy for Lebesgue integration).
    """

    points: np.ndarray
    measures: list
    cell: float
    n_iter: int
    periodic: np.ndarray
    cauchy: np.ndarray | None = None
    converged: np.ndarray | None = None
    cauchy_eps: float | None = None

    def __len__(self):
        return len(self.measures)

    def subset(self, idx):
        idx = np.asarray(idx)
        return EmpiricalEnsemble(
            self.points[idx],
            [self.measures[i] for i in idx],
            self.cell,
            self.n_iter,
            self.periodic,
            None if self.cauchy is None else self.cauchy[idx],
            None if self.converged is None else self.converged[idx],
            self.cauchy_eps,
        )

    def to_table(self, delimiter=","):
        """Rows ``sample, cell index..., weight``; a header line names the columns."""
        d = self.points.shape[1]
        head = ["sample"] + [f"cell{i}" for i in range(d)] + ["weight"]
        lines = [delimiter.join(head)]
        for s, mu in enumerate(self.measures):
            cells = np.round(mu.points / self.cell - 0.5).astype(np.int64)
            for c, w in zip(cells, mu.weights):
                lines.append(delimiter.join([str(s)] + [str(int(v)) for v in c] + [repr(float(w))]))
        return "\n".join(lines) + "\n"


def build_ensemble(fmap, Z, n_iter=10_000, cell=1.0 / 64, cauchy_eps=None, batch=256):
    """Empirical measures for every row of ``Z``, iterated as a batch.

    With ``cauchy_eps`` given, each sample is checked against its half-length
    measure and flagged non-convergent when the distance bound reaches
    ``cauchy_eps / 10``.
    """
    Z = np.atleast_2d(np.asarray(Z, float))
    mask = fmap.periodic
    measures, cauchy = [], []
    for s0 in range(0, len(Z), batch):
        cells = _orbit_cells(fmap, Z[s0 : s0 + batch], int(n_iter), cell)
        for s in range(cells.shape[1]):
            mu = _measure_from_cells(cells[:, s, :], cell, mask)
            measures.append(mu)
            if cauchy_eps is not None:
                half = _measure_from_cells(cells[: max(1, n_iter // 2), s, :], cell, mask)
                cauchy.append(kw_upper(half, mu))
    ens = EmpiricalEnsemble(Z, measures, cell, int(n_iter), mask)
    if cauchy_eps is not None:
        ens.cauchy = np.asarray(cauchy)
        ens.converged = ens.cauchy < cauchy_eps / 10.0
        ens.cauchy_eps = cauchy_eps
    return ens


def _pair_block(args):
    measures, pairs = args
    return [kw_exact(measures[i], measures[j]) for i, j in pairs]


def distance_matrix(measures, workers=1, block=256):
    """Symmetric matrix of exact distances; pairs are distributed over ``workers`` processes."""
    if isinstance(measures, EmpiricalEnsemble):
        measures = measures.measures
    S = len(measures)
    D = np.zeros((S, S))
    if S < 2:
        return D
    dirac = all(m.size == 1 for m in measures)
    if dirac:
        P = np.vstack([m.points for m in measures])
        return cost_matrix(P, P, measures[0].periodic)
    pairs = [(i, j) for i in range(S) for j in range(i + 1, S)]
    blocks = [(measures, pairs[k : k + block]) for k in range(0, len(pairs), block)]
    values = np.concatenate([np.asarray(v) for v in parallel_map(_pair_block, blocks, workers)])
    iu = np.triu_indices(S, 1)
    D[iu] = values
    D[(iu[1], iu[0])] = values
    return D


# ---------------------------------------------------------------------------
# emergence at scale


def greedy_median_costs(D):
    """Average cost after each step of greedy k-median with centres among samples.

    Returns ``(costs, centres)`` where ``costs[N-1]`` is the mean distance to
    the nearest of the first ``N`` centres.  The sequence does not depend on
    any scale, so the induced cover size is monotone in the scale.
    """
    S = len(D)
    cur = np.full(S, np.inf)
    costs, centres = [], []
    chosen = np.zeros(S, bool)
    for _ in range(S):
        tot = np.minimum(cur[:, None], D).sum(axis=0)
        tot[chosen] = np.inf
        c = int(np.argmin(tot))
        chosen[c] = True
        centres.append(c)
        cur = np.minimum(cur, D[:, c])
        costs.append(float(cur.mean()))
        if costs[-1] == 0.0:
            break
    return np.asarray(costs), centres


def farthest_point_order(D, start=0):
    """Farthest-point traversal; returns ``(order, insertion distances)``.

    The first ``L`` points of the order are pairwise at least
    ``insertion[L-1]`` apart (``insertion[0] = inf``).
    """
    S = len(D)
    order = [start]
    ins = [np.inf]
    mind = D[start].copy()
    mind[start] = -1.0
    for _ in range(S - 1):
        c = int(np.argmax(mind))
        if mind[c] <= 0.0:
            break
        order.append(c)
        ins.append(float(mind[c]))
        mind = np.minimum(mind, D[c])
        mind[order] = -1.0
    return np.asarray(order), np.asarray(ins)


@dataclass(frozen=True)
class Packing:
    """Packing centres ``idx`` (sample indices), pairwise at least ``2 r`` apart."""

    idx: np.ndarray
    r: float


def traversal_packings(D, start=0):
    order, ins = farthest_point_order(D, start)
    out = []
    for L in range(2, len(order) + 1):
        out.append(Packing(order[:L], ins[L - 1] / 2.0))
    return out


def packing_deficits(D, packing, weight=None):
    """Per-ball weighted deficit ``v_l = sum_{d(s,p_l) < r} w_s (r - d(s,p_l))``."""
    S = D.shape[0]
    w = np.full(S, 1.0 / S) if weight is None else weight
    sub = D[:, packing.idx]
    return (np.clip(packing.r - sub, 0.0, None) * w[:, None]).sum(axis=0)


def packing_lower_bound(deficits, eps):
    """Smallest ``N >= 1`` whose uncovered-ball deficit can fall below ``eps``.

    Any ``N`` measures come within ``r`` of at most ``N`` packing centres; the
    remaining balls each contribute at least their deficit to the average
    transport error, so the ``L - N`` smallest deficits must sum below ``eps``.
    """
    v = np.sort(np.asarray(deficits))
    L = len(v)
    csum = np.concatenate([[0.0], np.cumsum(v)])  # csum[m] = sum of m smallest
    for N in range(1, L + 1):
        if csum[L - N] < eps:
            return N
    return L


@dataclass
class EmergenceEstimator:
    """Cached greedy-median costs and packings of a fixed distance matrix."""

    D: np.ndarray
    costs: np.ndarray = field(init=False)
    packings: list = field(init=False)
    deficits: list = field(init=False)
    start: int = 0

    def __post_init__(self):
        self.D = np.asarray(self.D, float)
        self.costs, self.centres = greedy_median_costs(self.D)
        self.packings = traversal_packings(self.D, self.start) if len(self.D) > 1 else []
        self.deficits = [packing_deficits(self.D, p) for p in self.packings]

    def upper(self, eps):
        hit = np.nonzero(self.costs < eps)[0]
        return int(hit[0]) + 1 if len(hit) else len(self.costs) + 1

    def lower(self, eps, extra_deficits=()):
        best = 1
        for v in list(self.deficits) + list(extra_deficits):
            best = max(best, packing_lower_bound(v, eps))
        return best

    def at_scale(self, eps):
        lo, hi = self.lower(eps), self.upper(eps)
        if lo > hi:
            raise AssertionError(f"lower bound {lo} exceeds upper bound {hi} at scale {eps}")
        return lo, hi


def emergence_at_scale(ensemble_or_D, eps, workers=1):
    """``(lower, upper)`` bounds on the number of measures needed at scale ``eps``.

    ``upper`` is the size of a greedy k-median cover with centres among the
    samples; ``lower`` is the best weighted-packing bound from the
    farthest-point traversal started at the lexicographically first sample.
    Both bound the emergence with unrestricted centres, on the uniform
    sample average.
    """
    return _estimator(ensemble_or_D, workers).at_scale(eps)


def _lex_first(points):
    return int(np.lexsort(points.T[::-1])[0])


def _estimator(ensemble_or_D, workers=1):
    if isinstance(ensemble_or_D, EmergenceEstimator):
        return ensemble_or_D
    if isinstance(ensemble_or_D, EmpiricalEnsemble):
        if len(ensemble_or_D) == 0:
            raise ValueError("empty ensemble")
        D = distance_matrix(ensemble_or_D, workers)
        return EmergenceEstimator(D, start=_lex_first(ensemble_or_D.points))
    D = np.asarray(ensemble_or_D, float)
    if D.size == 0:
        raise ValueError("empty ensemble")
    return EmergenceEstimator(D)


@dataclass
class EmergenceCurve:
    """Bounds on the emergence at several scales and the fitted order.

    ``centres_restricted`` documents that upper bounds use sample members
    as centres; ``normalization`` names the reference measure.
    """

    scales: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    order_estimate: float | None = None
    order_lower: float | None = None
    order_upper: float | None = None
    samples: int = 0
    normalization: str = "uniform samples of the domain"
    centres_restricted: bool = True
    monte_carlo_error: float | None = None

    def table(self, delimiter=","):
        lines = [delimiter.join(["eps", "lower", "upper"])]
        for e, lo, hi in zip(self.scales, self.lower, self.upper):
            lines.append(delimiter.join([repr(float(e)), str(lo), str(hi)]))
        return "\n".join(lines) + "\n"


def emergence_curve(ensemble_or_D, scales, workers=1, fit=True):
    est = _estimator(ensemble_or_D, workers)
    scales = np.asarray(sorted(scales, reverse=True), float)
    lo, hi = zip(*(est.at_scale(e) for e in scales))
    S = len(est.D)
    # spread of nearest-neighbour distances: standard error of a sample-average cost
    nn = np.min(est.D + np.diag(np.full(S, np.inf)), axis=1) if S > 1 else np.zeros(S)
    mc = float(np.std(nn) / np.sqrt(S)) if S > 1 else 0.0
    curve = EmergenceCurve(scales, np.asarray(lo), np.asarray(hi), samples=S, monte_carlo_error=mc)
    if fit:
        try:
            emergence_order(curve)
        except DegenerateCurve:
            pass
    return curve


def _slope(scales, logs):
    """Slope of ``log(log E)`` vs ``-log eps`` given ``log E`` per scale."""
    lv = np.asarray(logs, float)
    ok = lv > 0.0
    if ok.sum() < 2:
        return None
    x = -np.log(np.asarray(scales, float)[ok])
    y = np.log(lv[ok])
    return float(np.polyfit(x, y, 1)[0])


def emergence_order(curve):
    """Least-squares slope of ``log log E(eps)`` against ``-log eps``.

    Uses the geometric mean of the lower and upper bounds at each scale and
    stores the order together with the two endpoint regressions on ``curve``.

    Raises
    ------
    DegenerateCurve
        If fewer than three scales have an upper bound of at least 2.
    """
    up = np.asarray(curve.upper, float)
    lo = np.asarray(curve.lower, float)
    if np.all(up <= 1):
        raise DegenerateCurve("emergence is 1 at every scale")
    if np.count_nonzero(up >= 2) < 3:
        raise DegenerateCurve("fewer than three scales with emergence at least 2")
    log_lo, log_up = np.log(lo), np.log(up)
    order = _slope(curve.scales, 0.5 * (log_lo + log_up))
    if order is None:
        raise DegenerateCurve("not enough scales with emergence above 1")
    curve.order_estimate = order
    curve.order_lower = _slope(curve.scales, log_lo)
    curve.order_upper = _slope(curve.scales, log_up)
    return order


@dataclass
class RestrictionReport:
    """Comparison of ``E_full(mass * eps)`` against ``E_restricted(eps)`` via lower bounds."""

    mass: float
    scales: np.ndarray
    full_lower: np.ndarray
    restricted_lower: np.ndarray
    holds: np.ndarray
    normalization: str = "restricted side normalized by its sampled mass"

    @property
    def passed(self):
        return bool(np.all(self.holds))


def restriction_check(ensemble, lo, hi, scales, D=None, workers=1):
    """Check the restriction inequality on the sub-box ``[lo, hi]``.

    The mass of the sub-box is the sampled fraction of initial points it
    contains.  Packings found for the restricted ensemble are also packings of
    the full ensemble, so they are evaluated on both sides.

    Raises
    ------
    EmptyRestriction
        If no sample lies in the box.
    """
    pts = ensemble.points
    inside = np.all((pts >= np.asarray(lo)) & (pts <= np.asarray(hi)), axis=1)
    if not inside.any():
        raise EmptyRestriction("no sampled point lies in the sub-box")
    if D is None:
        D = distance_matrix(ensemble, workers)
    S = len(D)
    sub = np.nonzero(inside)[0]
    mass = len(sub) / S
    full = EmergenceEstimator(D, start=_lex_first(pts))
    DE = D[np.ix_(sub, sub)]
    restricted = EmergenceEstimator(DE, start=_lex_first(pts[sub]))
    lifted = [packing_deficits(D, Packing(sub[p.idx], p.r)) for p in restricted.packings]
    fl, rl = [], []
    for e in scales:
        fl.append(full.lower(mass * e, lifted))
        rl.append(restricted.lower(e))
    fl, rl = np.asarray(fl), np.asarray(rl)
    return RestrictionReport(mass, np.asarray(scales, float), fl, rl, fl >= rl)
