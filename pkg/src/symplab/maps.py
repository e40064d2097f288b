"""Phase-space conventions and the zoo of symplectic maps.

Coordinates are ``(x_1..x_n, y_1..y_n)``. On torus charts the angular
coordinates live in ``[0, 1)`` (unit circumference) and are reduced after
every evaluation. All maps evaluate either a single point of shape ``(2n,)``
or a batch of shape ``(m, 2n)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, OrbitEscape, SymplabError
from .polynomial import Polynomial

TWO_PI = 2.0 * np.pi


class Chart(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    TORUS_ANNULUS = "torus_annulus"  # first n coordinates periodic
    TORUS = "torus"  # all 2n coordinates periodic


def periodic_mask(chart, n):
    chart = Chart(chart)
    if chart is Chart.EUCLIDEAN:
        return np.zeros(2 * n, dtype=bool)
    if chart is Chart.TORUS_ANNULUS:
        return np.r_[np.ones(n, dtype=bool), np.zeros(n, dtype=bool)]
    return np.ones(2 * n, dtype=bool)


def reduce_mod1(x):
    """Reduce to ``[0, 1)``; safe against ``-tiny % 1 == 1.0``."""
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


def reduce_torus(z, mask):
    z = np.array(z, dtype=float, copy=True)
    if np.any(mask):
        z[..., mask] = reduce_mod1(z[..., mask])
    return z


def wrap_difference(d, mask):
    """Signed difference with periodic components wrapped into ``[-1/2, 1/2)``."""
    d = np.array(d, dtype=float, copy=True)
    if np.any(mask):
        d[..., mask] = d[..., mask] - np.floor(d[..., mask] + 0.5)
    return d


def dinf(z1, z2, mask):
    """Max-norm distance, torus-aware per coordinate."""
    return np.max(np.abs(wrap_difference(np.asarray(z1) - np.asarray(z2), mask)), axis=-1)


def standard_symplectic_matrix(n):
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def _batch(z, dim):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != dim:
        raise DomainViolation(f"point has {z.shape[-1]} coordinates, map expects {dim}")
    single = z.ndim == 1
    return np.atleast_2d(z), single


def _unbatch(z, single):
    return z[0] if single else z


_REGISTRY = {}


def register(name):
    def deco(cls):
        cls.kind = name
        _REGISTRY[name] = cls
        return cls

    return deco


class SymplecticMap:
    """Common interface: ``__call__``, optional analytic Jacobian, config round trip."""

    kind = "abstract"
    n: int
    chart: Chart = Chart.EUCLIDEAN
    has_analytic_jacobian = False

    @property
    def dim(self):
        return 2 * self.n

    @property
    def periodic(self):
        return periodic_mask(self.chart, self.n)

    def __call__(self, z):
        z, single = _batch(z, self.dim)
        out = self._evaluate(z)
        return _unbatch(reduce_torus(out, self.periodic), single)

    evaluate = __call__

    def _evaluate(self, z):
        raise NotImplementedError

    def jacobian_analytic(self, z):
        if not self.has_analytic_jacobian:
            raise NotImplementedError(f"{self.kind} has no analytic Jacobian")
        z, single = _batch(z, self.dim)
        return _unbatch(self._jacobian(z), single)

    def _jacobian(self, z):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=float))


@register("standard")
@dataclass(frozen=True, eq=False)
class StandardMap(SymplecticMap):
    """Chirikov standard map on the unit-circumference torus.

    In angle units the map is ``(x, p) -> (x + p + a sin x, p + a sin x)``;
    with ``x, p`` in turns the kick becomes ``a sin(2 pi x) / (2 pi)``.
    """

    a: float
    n: int = field(default=1, init=False)
    chart: Chart = field(default=Chart.TORUS, init=False)
    has_analytic_jacobian = True

    def _evaluate(self, z):
        x, p = z[:, 0], z[:, 1]
        kick = self.a * np.sin(TWO_PI * x) / TWO_PI
        p1 = p + kick
        return np.stack([x + p1, p1], axis=-1)

    def _jacobian(self, z):
        c = self.a * np.cos(TWO_PI * z[:, 0])
        J = np.empty((len(z), 2, 2))
        J[:, 0, 0] = 1.0 + c
        J[:, 0, 1] = 1.0
        J[:, 1, 0] = c
        J[:, 1, 1] = 1.0
        return J

    def to_config(self):
        return {"type": self.kind, "a": float(self.a)}

    @classmethod
    def from_config(cls, d):
        return cls(a=float(d["a"]))


@register("twist")
@dataclass(frozen=True, eq=False)
class IntegrableTwist(SymplecticMap):
    """``(theta, r) -> (theta + alpha + grad Q(r), r)`` on the torus-annulus chart."""

    alpha: np.ndarray
    Q: Polynomial | None = None
    chart: Chart = field(default=Chart.TORUS_ANNULUS, init=False)
    has_analytic_jacobian = True

    def __post_init__(self):
        alpha = _vec(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        Q = self.Q if self.Q is not None else Polynomial.zero(len(alpha))
        if Q.nvars != len(alpha):
            raise ValueError("Q must be a polynomial in n variables")
        if Q.degree >= 1 and np.any(np.abs(Q.gradient(np.zeros(len(alpha)))) > 0):
            raise ValueError("grad Q(0) must vanish")
        object.__setattr__(self, "Q", Q)

    @property
    def n(self):
        return len(self.alpha)

    def _evaluate(self, z):
        n = self.n
        theta, r = z[:, :n], z[:, n:]
        shift = self.alpha + (self.Q.gradient(r) if not self.Q.is_zero else 0.0)
        return np.concatenate([theta + shift, r], axis=-1)

    def _jacobian(self, z):
        n = self.n
        m = len(z)
        J = np.tile(np.eye(2 * n), (m, 1, 1))
        if not self.Q.is_zero:
            J[:, :n, n:] = self.Q.hessian(z[:, n:])
        return J

    def to_config(self):
        return {"type": self.kind, "alpha": self.alpha.tolist(), "Q": self.Q.to_config()}

    @classmethod
    def from_config(cls, d):
        alpha = _vec(d["alpha"])
        Q = Polynomial.from_config(d["Q"]) if "Q" in d else None
        return cls(alpha=alpha, Q=Q)


@register("elliptic_normal_form")
@dataclass(frozen=True, eq=False)
class EllipticNormalForm(SymplecticMap):
    """Truncated Birkhoff normal form near an elliptic point.

    With ``z_k = x_k + i y_k`` the map is
    ``z_k -> z_k exp(2 pi i (alpha_hat_k + sum_m omega_km |z_m|^2)) + xi(z)``.
    Frequencies are in turns. ``omega`` must be symmetric for the map to be
    symplectic. ``remainder`` is an optional tuple of ``2n`` polynomials.
    """

    alpha_hat: np.ndarray
    omega: np.ndarray
    remainder: tuple | None = None
    chart: Chart = field(default=Chart.EUCLIDEAN, init=False)
    has_analytic_jacobian = True

    def __post_init__(self):
        a = _vec(self.alpha_hat)
        w = np.atleast_2d(np.asarray(self.omega, dtype=float))
        if w.shape != (len(a), len(a)):
            raise ValueError("omega must be n x n")
        object.__setattr__(self, "alpha_hat", a)
        object.__setattr__(self, "omega", w)
        if self.remainder is not None and len(self.remainder) != 2 * len(a):
            raise ValueError("remainder needs 2n polynomial components")

    @property
    def n(self):
        return len(self.alpha_hat)

    def phases(self, z):
        n = self.n
        I = z[:, :n] ** 2 + z[:, n:] ** 2
        return TWO_PI * (self.alpha_hat + I @ self.omega.T)

    def _evaluate(self, z):
        n = self.n
        phi = self.phases(z)
        x, y = z[:, :n], z[:, n:]
        c, s = np.cos(phi), np.sin(phi)
        out = np.concatenate([x * c - y * s, x * s + y * c], axis=-1)
        if self.remainder is not None:
            out = out + np.stack([p(z) for p in self.remainder], axis=-1)
        return out

    def _jacobian(self, z):
        n = self.n
        phi = self.phases(z)
        x, y = z[:, :n], z[:, n:]
        c, s = np.cos(phi), np.sin(phi)
        xp, yp = x * c - y * s, x * s + y * c
        # d phi_k / d x_m = 4 pi omega_km x_m
        dphi_dx = 2.0 * TWO_PI * self.omega[None, :, :] * x[:, None, :]
        dphi_dy = 2.0 * TWO_PI * self.omega[None, :, :] * y[:, None, :]
        m = len(z)
        J = np.zeros((m, 2 * n, 2 * n))
        eye = np.eye(n)[None]
        J[:, :n, :n] = eye * c[:, :, None] - yp[:, :, None] * dphi_dx
        J[:, :n, n:] = -eye * s[:, :, None] - yp[:, :, None] * dphi_dy
        J[:, n:, :n] = eye * s[:, :, None] + xp[:, :, None] * dphi_dx
        J[:, n:, n:] = eye * c[:, :, None] + xp[:, :, None] * dphi_dy
        if self.remainder is not None:
            J = J + np.stack([p.gradient(z) for p in self.remainder], axis=-2)
        return J

    def to_config(self):
        d = {
            "type": self.kind,
            "alpha_hat": self.alpha_hat.tolist(),
            "omega": self.omega.tolist(),
        }
        if self.remainder is not None:
            d["remainder"] = [p.to_config() for p in self.remainder]
        return d

    @classmethod
    def from_config(cls, d):
        rem = d.get("remainder")
        if rem is not None:
            rem = tuple(Polynomial.from_config(p) for p in rem)
        return cls(alpha_hat=_vec(d["alpha_hat"]), omega=np.asarray(d["omega"], float), remainder=rem)


@register("henon_like")
@dataclass(frozen=True, eq=False)
class HenonLike(SymplecticMap):
    """``(X, Y) -> (Y, -grad V(Y) - X)``."""

    V: Polynomial
    chart: Chart = field(default=Chart.EUCLIDEAN, init=False)
    has_analytic_jacobian = True

    @property
    def n(self):
        return self.V.nvars

    def _evaluate(self, z):
        n = self.n
        X, Y = z[:, :n], z[:, n:]
        return np.concatenate([Y, -self.V.gradient(Y) - X], axis=-1)

    def _jacobian(self, z):
        n = self.n
        m = len(z)
        J = np.zeros((m, 2 * n, 2 * n))
        J[:, :n, n:] = np.eye(n)
        J[:, n:, :n] = -np.eye(n)
        J[:, n:, n:] = -self.V.hessian(z[:, n:])
        return J

    def to_config(self):
        return {"type": self.kind, "V": self.V.to_config()}

    @classmethod
    def from_config(cls, d):
        return cls(V=Polynomial.from_config(d["V"]))


@register("linear")
@dataclass(frozen=True, eq=False)
class LinearSymplectic(SymplecticMap):
    """``z -> M z`` with ``M^T J M = J``; on a torus chart ``M`` should be integral."""

    M: np.ndarray
    chart: Chart = Chart.EUCLIDEAN
    has_analytic_jacobian = True

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        if M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise ValueError("M must be a square matrix of even size")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "chart", Chart(self.chart))

    @property
    def n(self):
        return self.M.shape[0] // 2

    def _evaluate(self, z):
        return z @ self.M.T

    def _jacobian(self, z):
        return np.broadcast_to(self.M, (len(z),) + self.M.shape).copy()

    def to_config(self):
        return {"type": self.kind, "M": self.M.tolist(), "chart": self.chart.value}

    @classmethod
    def from_config(cls, d):
        return cls(M=np.asarray(d["M"], float), chart=Chart(d.get("chart", "euclidean")))


def identity_map(n, chart=Chart.EUCLIDEAN):
    return LinearSymplectic(np.eye(2 * n), chart=chart)


@register("affine_chart")
@dataclass(frozen=True, eq=False)
class AffineChart(SymplecticMap):
    """Affine conformally symplectic chart ``z -> A z + b`` with ``A^T J A = lambda J``."""

    A: np.ndarray
    b: np.ndarray | None = None
    chart: Chart = field(default=Chart.EUCLIDEAN, init=False)
    has_analytic_jacobian = True

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.zeros(A.shape[0]) if self.b is None else _vec(self.b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        n = A.shape[0] // 2
        Om = standard_symplectic_matrix(n)
        P = A.T @ Om @ A
        lam = P[0, n]
        if lam == 0 or not np.allclose(P, lam * Om, rtol=1e-10, atol=1e-12 * max(1.0, abs(lam))):
            raise ValueError("A is not conformally symplectic")
        object.__setattr__(self, "_lam", float(lam))

    @property
    def n(self):
        return self.A.shape[0] // 2

    @property
    def conformal_factor(self):
        return self._lam

    @classmethod
    def scaling(cls, center, x_scale, y_scale):
        """Chart ``(X, Y) -> center + (x_scale X, y_scale Y)`` (scalar scales)."""
        center = _vec(center)
        n = len(center) // 2
        A = np.diag(np.r_[np.full(n, x_scale), np.full(n, y_scale)])
        return cls(A, center)

    def _evaluate(self, z):
        return z @ self.A.T + self.b

    def _jacobian(self, z):
        return np.broadcast_to(self.A, (len(z),) + self.A.shape).copy()

    def inverse(self):
        Ainv = np.linalg.inv(self.A)
        return AffineChart(Ainv, -Ainv @ self.b)

    def to_config(self):
        return {"type": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_config(cls, d):
        return cls(np.asarray(d["A"], float), _vec(d["b"]))


@register("grid_permutation")
@dataclass(frozen=True, eq=False)
class GridPermutation(SymplecticMap):
    """Piecewise translation permuting the cells of a product grid on ``T^n x [0,1]^n``.

    ``shape[i]`` is the number of cells along coordinate ``i``; ``perm[c]`` is
    the image of flat cell index ``c`` (C order). Each point keeps its offset
    inside the cell, so cell volumes are preserved exactly.
    """

    shape: tuple
    perm: np.ndarray
    chart: Chart = field(default=Chart.TORUS_ANNULUS, init=False)
    has_analytic_jacobian = True

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        perm = np.asarray(self.perm, dtype=np.int64)
        if len(shape) % 2:
            raise ValueError("grid needs an even number of axes")
        ncell = int(np.prod(shape))
        if perm.shape != (ncell,):
            raise ValueError("perm length must equal the number of cells")
        if not np.array_equal(np.sort(perm), np.arange(ncell)):
            raise ValueError("perm is not a bijection of the cells")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "perm", perm)

    @property
    def n(self):
        return len(self.shape) // 2

    @classmethod
    def identity(cls, shape):
        return cls(shape, np.arange(int(np.prod(shape))))

    def cell_of(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        N = np.asarray(self.shape)
        idx = np.floor(z * N).astype(np.int64)
        idx = np.clip(idx, 0, N - 1)
        return idx, z * N - idx

    def _evaluate(self, z):
        N = np.asarray(self.shape)
        idx, offset = self.cell_of(z)
        flat = np.ravel_multi_index(tuple(idx.T), self.shape)
        new = np.stack(np.unravel_index(self.perm[flat], self.shape), axis=-1)
        return (new + offset) / N

    def _jacobian(self, z):
        return np.tile(np.eye(self.dim), (len(z), 1, 1))

    def inverse(self):
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(len(self.perm))
        return GridPermutation(self.shape, inv)

    def compose(self, other):
        """Cell permutation of ``self o other``."""
        if other.shape != self.shape:
            raise ValueError("grids differ")
        return GridPermutation(self.shape, self.perm[other.perm])

    def to_config(self):
        return {"type": self.kind, "shape": list(self.shape), "perm": self.perm.tolist()}

    @classmethod
    def from_config(cls, d):
        return cls(tuple(d["shape"]), np.asarray(d["perm"], dtype=np.int64))


@register("iterate")
@dataclass(frozen=True, eq=False)
class Iterate(SymplecticMap):
    inner: SymplecticMap
    k: int

    def __post_init__(self):
        if int(self.k) < 0:
            raise ValueError("k must be non-negative")
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self):
        return self.inner.n

    @property
    def chart(self):
        return self.inner.chart

    @property
    def has_analytic_jacobian(self):
        return self.inner.has_analytic_jacobian

    def _evaluate(self, z):
        for _ in range(self.k):
            z = self.inner(z)
        return z

    def _jacobian(self, z):
        J = np.tile(np.eye(self.dim), (len(z), 1, 1))
        for _ in range(self.k):
            J = self.inner.jacobian_analytic(z) @ J
            z = self.inner(z)
        return J

    def to_config(self):
        return {"type": self.kind, "k": self.k, "inner": self.inner.to_config()}

    @classmethod
    def from_config(cls, d):
        return cls(map_from_config(d["inner"]), int(d["k"]))


@register("conjugate")
@dataclass(frozen=True, eq=False)
class Conjugate(SymplecticMap):
    """``H o inner o H^{-1}`` for an invertible chart ``H`` (affine or grid permutation)."""

    inner: SymplecticMap
    H: SymplecticMap

    @property
    def n(self):
        return self.inner.n

    @property
    def chart(self):
        return self.inner.chart

    @property
    def has_analytic_jacobian(self):
        return self.inner.has_analytic_jacobian and self.H.has_analytic_jacobian

    def _evaluate(self, z):
        Hinv = self._Hinv
        return self.H(self.inner(Hinv(z)))

    @property
    def _Hinv(self):
        cached = self.__dict__.get("_hinv_cache")
        if cached is None:
            cached = self.H.inverse()
            object.__setattr__(self, "_hinv_cache", cached)
        return cached

    def _jacobian(self, z):
        Hinv = self._Hinv
        w = Hinv(z)
        v = self.inner(w)
        return self.H.jacobian_analytic(v) @ self.inner.jacobian_analytic(w) @ Hinv.jacobian_analytic(z)

    def to_config(self):
        return {"type": self.kind, "inner": self.inner.to_config(), "H": self.H.to_config()}

    @classmethod
    def from_config(cls, d):
        return cls(map_from_config(d["inner"]), map_from_config(d["H"]))


def map_from_config(d):
    """Build a map from its config table (the ``type`` key selects the variant)."""
    # variants defined in other modules register on import
    from . import construction, normalform  # noqa: F401

    kind = d.get("type")
    if kind not in _REGISTRY:
        raise SymplabError(f"unknown map type {kind!r}")
    return _REGISTRY[kind].from_config(d)


# ----------------------------------------------------------------------------
# operations


def jacobian(fmap, z, scheme="analytic", h=1e-5):
    """Jacobian of ``fmap`` at ``z`` (single point or batch).

    ``scheme`` is ``"analytic"`` or ``"central_difference"``; the latter uses
    step ``h`` and wraps periodic output differences.
    """
    if scheme == "analytic":
        return fmap.jacobian_analytic(z)
    if scheme != "central_difference":
        raise ValueError(f"unknown scheme {scheme!r}")
    zb, single = _batch(z, fmap.dim)
    dim = fmap.dim
    mask = fmap.periodic
    J = np.empty((len(zb), dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        diff = wrap_difference(fmap(zb + e) - fmap(zb - e), mask)
        J[:, :, j] = diff / (2 * h)
    return _unbatch(J, single)


@dataclass
class SymplecticityReport:
    max_defect: float
    points_tested: int
    failures: list
    tol: float

    @property
    def passed(self):
        return not self.failures


def symplectic_defect(J):
    """Max-norm of ``J^T Omega J - Omega`` per matrix."""
    J = np.asarray(J)
    n = J.shape[-1] // 2
    Om = standard_symplectic_matrix(n)
    D = np.swapaxes(J, -1, -2) @ Om @ J - Om
    return np.max(np.abs(D), axis=(-2, -1))


def check_symplectic(fmap, sample, tol=1e-10, scheme=None, h=1e-5):
    """Sample ``J^T Omega J - Omega`` over ``sample``.

    Points where evaluation fails are recorded as failures with infinite
    defect. ``scheme`` defaults to analytic when the map provides it.
    """
    if scheme is None:
        scheme = "analytic" if fmap.has_analytic_jacobian else "central_difference"
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    defects = np.empty(len(sample))
    try:
        defects[:] = symplectic_defect(jacobian(fmap, sample, scheme, h))
    except SymplabError:
        for i, z in enumerate(sample):
            try:
                defects[i] = symplectic_defect(jacobian(fmap, z, scheme, h))
            except SymplabError:
                defects[i] = np.inf
    failures = [(sample[i].tolist(), float(defects[i])) for i in np.flatnonzero(~(defects <= tol))]
    return SymplecticityReport(
        max_defect=float(np.max(defects)) if len(defects) else 0.0,
        points_tested=len(sample),
        failures=failures,
        tol=tol,
    )


def iterate_orbit(fmap, z, k):
    """Return the ``k + 1`` points ``z, f(z), ..., f^k(z)``; works on batches too."""
    z = np.asarray(z, dtype=float)
    orbit = np.empty((k + 1,) + z.shape)
    orbit[0] = reduce_torus(z, fmap.periodic)
    for i in range(k):
        try:
            orbit[i + 1] = fmap(orbit[i])
        except DomainViolation as exc:
            raise OrbitEscape(i + 1, exc) from exc
        except SymplabError as exc:
            raise OrbitEscape(i + 1, exc) from exc
    return orbit


def export_orbit(orbit, path=None, delimiter=","):
    """Delimited text, one row per step, columns are coordinates."""
    orbit = np.asarray(orbit)
    dim = orbit.shape[-1]
    header = delimiter.join(["step"] + [f"z{i}" for i in range(dim)])
    lines = [header]
    for i, row in enumerate(orbit.reshape(-1, dim)):
        lines.append(delimiter.join([str(i)] + [repr(float(v)) for v in row]))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
