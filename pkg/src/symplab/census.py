"""Periodic-point census, finite-time Lyapunov spectra, periodic spots and
renormalized-iteration distances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import OrbitEscape, SymplabError
from .maps import Iterate, jacobian, reduce_torus, wrap_difference
from .util import box_grid, box_lattice, chunks, parallel_map


@dataclass
class PeriodicPoint:
    point: np.ndarray
    period: int
    residual: float
    multipliers: np.ndarray


@dataclass
class PeriodicSearch:
    """Result of :func:`find_periodic` for one ``k``."""

    k: int
    points: list
    seeds: int
    dropped: int
    tol: float
    dedup_radius: float
    continuum: bool

    @property
    def count_dividing(self):
        return len(self.points)

    @property
    def count_exact(self):
        return sum(1 for p in self.points if p.period == self.k)


@dataclass
class CensusReport:
    counts: dict  # k -> number of points of minimal period k
    dividing: dict  # k -> number of points with period dividing k
    flagged: dict  # k -> continuum degeneracy flag
    growth_stat: float
    tol: float
    dedup_radius: float
    seeds_per_axis: int
    dropped: dict = field(default_factory=dict)

    def table(self, delimiter=","):
        lines = [delimiter.join(["k", "count", "dividing", "flagged"])]
        for k in sorted(self.counts):
            lines.append(delimiter.join([str(k), str(self.counts[k]), str(self.dividing[k]), str(int(self.flagged[k]))]))
        return "\n".join(lines) + "\n"


@dataclass
class LyapunovReport:
    exponents: np.ndarray
    k: int
    discard: int

    @property
    def pairing_defect(self):
        e = self.exponents
        return float(np.max(np.abs(e + e[::-1]))) if len(e) else 0.0


def _iterate_with_jacobian(fmap, z, k):
    """``f^k(z)`` and ``Df^k(z)`` for a batch of points."""
    dim = fmap.dim
    J = np.tile(np.eye(dim), (len(z), 1, 1))
    scheme = "analytic" if fmap.has_analytic_jacobian else "central_difference"
    for _ in range(k):
        J = jacobian(fmap, z, scheme) @ J
        z = fmap(z)
    return z, J


def _newton_batch(args):
    fmap, seeds, k, tol, maxiter = args
    mask = fmap.periodic
    z = seeds.copy()
    ok = np.zeros(len(z), dtype=bool)
    alive = np.ones(len(z), dtype=bool)
    for _ in range(maxiter):
        idx = np.flatnonzero(alive & ~ok)
        if len(idx) == 0:
            break
        try:
            img, J = _iterate_with_jacobian(fmap, z[idx], k)
        except SymplabError:
            # evaluate point by point to isolate escapes
            img = np.empty((len(idx), fmap.dim))
            J = np.empty((len(idx), fmap.dim, fmap.dim))
            for a, i in enumerate(idx):
                try:
                    img[a], J[a] = (v[0] for v in _iterate_with_jacobian(fmap, z[i : i + 1], k))
                except SymplabError:
                    img[a] = np.nan
                    J[a] = np.nan
        F = wrap_difference(img - z[idx], mask)
        res = np.max(np.abs(F), axis=1)
        good = np.isfinite(res)
        alive[idx[~good]] = False
        conv = good & (res <= tol * 1e-2)
        ok[idx[conv]] = True
        step_idx = good & ~conv
        if not np.any(step_idx):
            continue
        A = J[step_idx] - np.eye(fmap.dim)[None]
        rhs = F[step_idx]
        step = np.empty_like(rhs)
        cond = np.linalg.cond(A)
        regular = np.isfinite(cond) & (cond < 1e10)
        if np.any(regular):
            step[regular] = np.linalg.solve(A[regular], rhs[regular][..., None])[..., 0]
        if np.any(~regular):
            # least-squares steps cope with degenerate (continuum) roots
            pinv = np.linalg.pinv(A[~regular], rcond=1e-12)
            step[~regular] = (pinv @ rhs[~regular][..., None])[..., 0]
        z[idx[step_idx]] = reduce_torus(z[idx[step_idx]] - step, mask)
        if not np.all(np.isfinite(z[alive])):
            bad = ~np.all(np.isfinite(z), axis=1)
            alive[bad] = False
    # final acceptance test on everything still alive
    idx = np.flatnonzero(alive)
    final_res = np.full(len(z), np.inf)
    if len(idx):
        try:
            img = Iterate(fmap, k)(z[idx])
            final_res[idx] = np.max(np.abs(wrap_difference(img - z[idx], mask)), axis=1)
        except SymplabError:
            for i in idx:
                try:
                    img = Iterate(fmap, k)(z[i])
                    final_res[i] = np.max(np.abs(wrap_difference(img - z[i], mask)))
                except SymplabError:
                    pass
    return z, final_res


def deduplicate(points, radius, mask):
    """Cluster points closer than ``radius`` (torus-aware); returns sorted representatives.

    Each cluster is represented by its lexicographically smallest member, so
    the result does not depend on the input order.
    """
    points = np.asarray(points, float)
    if len(points) == 0:
        return points, np.zeros(0, dtype=int)
    # collapse points sharing a quantization bucket first (keeps the smallest member)
    order = np.lexsort(points.T[::-1])
    keys = np.floor(reduce_torus(points, mask)[order] / radius).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    keep = order[np.sort(first)]
    reps_all, idx_all = _cluster(points[keep], radius, mask)
    return reps_all, keep[idx_all]


def _cluster(points, radius, mask):
    data = points.copy()
    box = np.empty(points.shape[1])
    for i in range(points.shape[1]):
        if mask[i]:
            box[i] = 1.0
        else:
            lo = data[:, i].min()
            data[:, i] -= lo
            box[i] = data[:, i].max() + 10.0 * radius + 1.0
    data = np.where(data >= box, data - box, data)
    tree = cKDTree(data, boxsize=box)
    pairs = tree.query_pairs(radius, p=np.inf, output_type="ndarray")
    n = len(points)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    ncomp, labels = connected_components(graph, directed=False)
    order = np.lexsort(points.T[::-1])
    reps = np.full(ncomp, -1)
    for i in order:
        if reps[labels[i]] < 0:
            reps[labels[i]] = i
    rep_points = points[reps]
    sort = np.lexsort(rep_points.T[::-1])
    return rep_points[sort], reps[sort]


def _divisors(k):
    return [d for d in range(1, k) if k % d == 0]


def find_periodic(fmap, region, k, seeds_per_axis=16, tol=1e-10, maxiter=50, workers=1, chunk=200_000, seeds=None):
    """Newton search for points with ``f^k(z) = z`` from a uniform seed grid.

    Parameters
    ----------
    fmap : SymplecticMap
    region : (lo, hi)
        Box bounds (length ``2n`` each); roots outside are discarded.
    k : int
    seeds_per_axis : int
        Seeds ``lo + i (hi - lo) / seeds_per_axis`` per coordinate.
    tol : float
        Acceptance tolerance on ``||f^k(z) - z||_inf``; duplicates are merged
        within ``10 tol``.
    seeds : ndarray, optional
        Explicit seeds overriding the grid.

    Returns
    -------
    PeriodicSearch
    """
    lo, hi = (np.asarray(b, float) for b in region)
    mask = fmap.periodic
    if seeds is None:
        seeds = box_lattice(lo, hi, seeds_per_axis)
    seeds = reduce_torus(seeds, mask)
    jobs = [(fmap, seeds[a:b], k, tol, maxiter) for a, b in chunks(len(seeds), chunk)]
    results = parallel_map(_newton_batch, jobs, workers)
    roots = np.concatenate([r[0] for r in results]) if results else np.zeros((0, fmap.dim))
    res = np.concatenate([r[1] for r in results]) if results else np.zeros(0)
    good = res <= tol
    inside = np.all(((roots >= lo - 10 * tol) & (roots <= hi + 10 * tol)) | mask[None], axis=1)
    good &= inside
    dropped = int(len(seeds) - np.count_nonzero(good))
    radius = 10.0 * tol
    reps, _ = deduplicate(roots[good], radius, mask)
    pts = []
    if len(reps):
        img, J = _iterate_with_jacobian(fmap, reps, k)
        resid = np.max(np.abs(wrap_difference(img - reps, mask)), axis=1)
        mult = np.linalg.eigvals(J)
        period = np.full(len(reps), k)
        for d in _divisors(k):
            imgd = Iterate(fmap, d)(reps)
            hit = np.max(np.abs(wrap_difference(imgd - reps, mask)), axis=1) <= tol
            period = np.where(hit & (period == k), d, period)
        for i in range(len(reps)):
            pts.append(PeriodicPoint(reps[i], int(period[i]), float(resid[i]), mult[i]))
    near_one = [np.any(np.abs(p.multipliers - 1.0) < 1e-6) for p in pts]
    continuum = bool(pts) and (np.mean(near_one) > 0.5)
    return PeriodicSearch(k, pts, len(seeds), dropped, tol, radius, continuum)


def growth_exponent(counts):
    """``max_k log(max(#Per_k, 1)) / log k`` over the recorded ``k >= 2``."""
    if isinstance(counts, CensusReport):
        counts = counts.counts
    vals = [np.log(max(c, 1)) / np.log(k) for k, c in counts.items() if k >= 2]
    return float(max(vals, default=0.0))


def census(fmap, region, ks, seeds_per_axis=16, tol=1e-10, workers=1, seeds_for=None):
    """Run :func:`find_periodic` for each ``k`` and tabulate the counts.

    ``seeds_for`` may map ``k`` to an explicit seeds-per-axis value.
    """
    counts, dividing, flagged, dropped = {}, {}, {}, {}
    searches = {}
    for k in ks:
        spa = seeds_for(k) if seeds_for else seeds_per_axis
        s = find_periodic(fmap, region, k, spa, tol, workers=workers)
        searches[k] = s
        counts[k] = s.count_exact
        dividing[k] = s.count_dividing
        flagged[k] = s.continuum
        dropped[k] = s.dropped
    report = CensusReport(
        counts=counts,
        dividing=dividing,
        flagged=flagged,
        growth_stat=growth_exponent(counts),
        tol=tol,
        dedup_radius=10 * tol,
        seeds_per_axis=seeds_per_axis,
        dropped=dropped,
    )
    return report, searches


def lyapunov_spectrum(fmap, z, k, discard=100):
    """Finite-time Lyapunov exponents by QR re-orthonormalization.

    The first ``discard`` steps only align the frame and are not averaged.
    """
    z = np.asarray(z, float)
    dim = fmap.dim
    scheme = "analytic" if fmap.has_analytic_jacobian else "central_difference"
    Q = np.eye(dim)
    sums = np.zeros(dim)
    for i in range(discard + k):
        try:
            J = jacobian(fmap, z, scheme)
            z = fmap(z)
        except SymplabError as exc:
            raise OrbitEscape(i + 1, exc) from exc
        Q, R = np.linalg.qr(J @ Q)
        d = np.diag(R)
        # keep the frame orientation consistent
        sign = np.sign(d)
        sign[sign == 0] = 1.0
        Q = Q * sign
        if i >= discard:
            sums += np.log(np.abs(d))
    return LyapunovReport(np.sort(sums / k)[::-1], k, discard)


def detect_periodic_spot(fmap, box, N, grid=8, tol=1e-12):
    """Fraction of cell-centred grid points in ``box`` with ``||f^N z - z||_inf <= tol``."""
    lo, hi = (np.asarray(b, float) for b in box)
    pts = box_grid(lo, hi, grid)
    mask = fmap.periodic
    ok = np.zeros(len(pts), dtype=bool)
    z = pts.copy()
    alive = np.ones(len(pts), dtype=bool)
    for _ in range(N):
        try:
            z[alive] = fmap(z[alive])
        except SymplabError:
            for i in np.flatnonzero(alive):
                try:
                    z[i] = fmap(z[i])
                except SymplabError:
                    alive[i] = False
    d = np.max(np.abs(wrap_difference(z - pts, mask)), axis=1)
    ok = alive & (d <= tol)
    return float(np.mean(ok))


def unit_ball_grid(dim, grid):
    pts = box_grid(-np.ones(dim), np.ones(dim), grid)
    return pts[np.linalg.norm(pts, axis=1) <= 1.0]


def renormalized_distance(fmap, H, k, target, grid=9):
    """``sup_B ||H^{-1} f^k H - target||_inf`` over a grid of the unit ball ``B``.

    ``H`` is an affine conformally symplectic chart (``None`` for the identity).
    """
    pts = unit_ball_grid(fmap.dim, grid)
    z = H(pts) if H is not None else pts
    try:
        img = Iterate(fmap, k)(z) if k > 0 else z
    except SymplabError as exc:
        raise OrbitEscape(k, exc) from exc
    if H is not None:
        img = H.inverse()(img)
    return float(np.max(np.abs(img - target(pts)))) if len(pts) else 0.0
