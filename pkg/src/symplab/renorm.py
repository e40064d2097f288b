"""Local homoclinic model, return maps near the tangency and their rescaling limit.

Near a saddle ``O`` the map is linear, ``(x, y) -> (e^{-tau} x, e^{tau} y)``.
A homoclinic orbit leaves through ``M^u = (0, y^u)`` and returns through
``M^s = (x^s, 0)``; the transition from a neighbourhood of ``M^u`` to one of
``M^s`` is

    xbar = x^s + a x + b (y - y^u) + phi2(x, y - y^u)
    ybar = (c + phi1(x, y - y^u)) x + (b y^u + x^s) nu^r - nu^{r+1} grad V((xbar - x^s) / nu)

with ``b c = -1``.  Choosing ``j`` with ``b nu^r = e^{-j tau}`` and rescaling
``(X, Y) -> (nu X, nu Y / b)`` turns the return map into a map that
converges, as ``nu -> 0``, to the Henon-like map
``(X, Y) -> (Y, -X + C Y - grad V(Y))`` with ``C_il = sum_m d_{y_l} Phi1_im(0) x^s_m``.

``a, b, c`` are scalars acting as multiples of the identity on ``R^n``.
``phi1`` is either one polynomial (a scalar factor) or an ``n x n`` table of
polynomials; ``phi2`` is a tuple of ``n`` polynomials; all take ``2n``
variables ``(x, y - y^u)``; ``V`` takes ``n`` variables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import AsymmetricC, BoxOutsideLinearization, InsufficientPoints
from .maps import Chart, HenonLike, LinearSymplectic, SymplecticMap, register
from .polynomial import Polynomial
from .util import parallel_map

MAX_DEGREE = 6


def _unit(n, i):
    e = [0] * (2 * n)
    e[i] = 1
    return tuple(e)


@dataclass(frozen=True, eq=False)
class HomoclinicModel:
    """Data of the local model (see module docstring).

    ``linear_radius`` is the radius (max-norm) of the neighbourhood of the
    saddle on which the map is linear; return boxes must fit inside it.
    """

    n: int
    tau: float
    xs: tuple
    yu: tuple
    a: object
    b: object
    c: object
    phi1: object = None
    phi2: tuple | None = None
    V: Polynomial | None = None
    r: int = 3
    m: int = 0
    linear_radius: float = 1.0

    def __post_init__(self):
        n = int(self.n)
        object.__setattr__(self, "n", n)
        if len(self.xs) != n or len(self.yu) != n:
            raise ValueError("x^s and y^u must have n entries")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        phi1 = self.phi1
        if phi1 is None:
            table = tuple(tuple(Polynomial.zero(2 * n) for _ in range(n)) for _ in range(n))
        elif isinstance(phi1, Polynomial):
            z = Polynomial.zero(2 * n)
            table = tuple(tuple(phi1 if i == k else z for k in range(n)) for i in range(n))
        else:
            table = tuple(tuple(row) for row in phi1)
        object.__setattr__(self, "_phi1_table", table)
        phi2 = self.phi2 if self.phi2 is not None else tuple(Polynomial.zero(2 * n) for _ in range(n))
        object.__setattr__(self, "phi2", tuple(phi2))
        V = self.V if self.V is not None else Polynomial.zero(n)
        object.__setattr__(self, "V", V)
        polys = [p for row in table for p in row] + list(self.phi2)
        for p in polys:
            if p.nvars != 2 * n:
                raise ValueError("phi1 and phi2 take 2n variables")
            if p.degree > MAX_DEGREE:
                raise ValueError(f"polynomial degree above {MAX_DEGREE}")
            if p.coefficient((0,) * (2 * n)) != 0:
                raise ValueError("phi1 and phi2 must vanish at 0")
        for p in self.phi2:
            if any(p.coefficient(_unit(n, i)) != 0 for i in range(2 * n)):
                raise ValueError("phi2 must vanish at 0 together with its derivative")
        if V.nvars != n or V.degree > MAX_DEGREE:
            raise ValueError("V takes n variables and has degree at most 6")

    # -- derived data ----------------------------------------------------------
    @property
    def phi1_table(self):
        return self._phi1_table

    def C_exact(self):
        """``C_il = sum_m d_{y_l} Phi1_im(0) x^s_m`` with the input number types."""
        n = self.n
        T = self._phi1_table
        return [
            [sum((T[i][m].coefficient(_unit(n, n + l)) * self.xs[m] for m in range(n)), 0) for l in range(n)]
            for i in range(n)
        ]

    def C_matrix(self):
        return np.array([[float(v) for v in row] for row in self.C_exact()])

    # -- evaluation ------------------------------------------------------------
    def _phi1_eval(self, w):
        """``Phi1(w)`` as an array ``(N, n, n)``."""
        n = self.n
        return np.stack([np.stack([self._phi1_table[i][k](w) for k in range(n)], -1) for i in range(n)], -2)

    def _phi1_grad(self, w):
        """``d Phi1_ik / d w_l`` as an array ``(N, n, n, 2n)``."""
        n = self.n
        return np.stack(
            [np.stack([self._phi1_table[i][k].gradient(w) for k in range(n)], -2) for i in range(n)], -3
        )

    def transition(self, z, nu=None):
        """Transition map on a batch ``z = (x, y)``; ``nu=None`` drops the perturbation."""
        n = self.n
        x, y = z[:, :n], z[:, n:]
        eta = y - np.asarray(self.yu, float)
        w = np.concatenate([x, eta], axis=-1)
        a, b, c = float(self.a), float(self.b), float(self.c)
        xs = np.asarray(self.xs, float)
        xbar = xs + a * x + b * eta + np.stack([p(w) for p in self.phi2], -1)
        ybar = c * x + np.einsum("...ik,...k->...i", self._phi1_eval(w), x)
        if nu is not None:
            r = self.r
            ybar = ybar + (b * np.asarray(self.yu, float) + xs) * nu**r
            ybar = ybar - nu ** (r + 1) * self.V.gradient((xbar - xs) / nu)
        return np.concatenate([xbar, ybar], axis=-1)

    def transition_jacobian(self, z, nu=None):
        n = self.n
        x, y = z[:, :n], z[:, n:]
        eta = y - np.asarray(self.yu, float)
        w = np.concatenate([x, eta], axis=-1)
        a, b, c = float(self.a), float(self.b), float(self.c)
        N = len(z)
        I = np.eye(n)
        Dphi2 = np.stack([p.gradient(w) for p in self.phi2], -2)  # (N, n, 2n)
        J = np.zeros((N, 2 * n, 2 * n))
        J[:, :n, :n] = a * I + Dphi2[:, :, :n]
        J[:, :n, n:] = b * I + Dphi2[:, :, n:]
        P = self._phi1_eval(w)
        G = self._phi1_grad(w)  # (N, n, n, 2n)
        xG = np.einsum("nikl,nk->nil", G, x)
        J[:, n:, :n] = c * I + P + xG[:, :, :n]
        J[:, n:, n:] = xG[:, :, n:]
        if nu is not None:
            xs = np.asarray(self.xs, float)
            xbar = xs + a * x + b * eta + np.stack([p(w) for p in self.phi2], -1)
            H = self.V.hessian((xbar - xs) / nu)
            J[:, n:, :] -= nu**self.r * np.einsum("nij,njk->nik", H, J[:, :n, :])
        return J

    def transition_exact(self, x, y):
        """Unperturbed transition in exact arithmetic (inputs converted by ``Fraction``)."""
        n = self.n
        x = [Fraction(v) for v in x]
        eta = [Fraction(v) - Fraction(u) for v, u in zip(y, self.yu)]
        w = x + eta
        a, b, c = Fraction(self.a), Fraction(self.b), Fraction(self.c)
        xbar = [Fraction(self.xs[i]) + a * x[i] + b * eta[i] + self.phi2[i].evaluate_exact(w) for i in range(n)]
        ybar = [
            c * x[i] + sum((self._phi1_table[i][k].evaluate_exact(w) * x[k] for k in range(n)), Fraction(0))
            for i in range(n)
        ]
        return xbar, ybar

    # -- serialization ---------------------------------------------------------
    def to_config(self):
        def num(v):
            return str(v) if isinstance(v, Fraction) else v

        return {
            "n": self.n,
            "tau": float(self.tau),
            "xs": [num(v) for v in self.xs],
            "yu": [num(v) for v in self.yu],
            "a": num(self.a),
            "b": num(self.b),
            "c": num(self.c),
            "phi1": [[p.to_config() for p in row] for row in self._phi1_table],
            "phi2": [p.to_config() for p in self.phi2],
            "V": self.V.to_config(),
            "r": self.r,
            "m": self.m,
            "linear_radius": float(self.linear_radius),
        }

    @classmethod
    def from_config(cls, d):
        def num(v):
            return Fraction(v) if isinstance(v, str) else v

        n = int(d["n"])
        phi1 = d.get("phi1")
        if phi1 is not None:
            if isinstance(phi1, dict):
                phi1 = Polynomial.from_config(phi1)
            else:
                phi1 = tuple(tuple(Polynomial.from_config(p) for p in row) for row in phi1)
        phi2 = d.get("phi2")
        if phi2 is not None:
            phi2 = tuple(Polynomial.from_config(p) for p in phi2)
        V = Polynomial.from_config(d["V"]) if "V" in d else None
        return cls(
            n=n,
            tau=float(d["tau"]),
            xs=tuple(num(v) for v in d["xs"]),
            yu=tuple(num(v) for v in d["yu"]),
            a=num(d["a"]),
            b=num(d["b"]),
            c=num(d["c"]),
            phi1=phi1,
            phi2=phi2,
            V=V,
            r=int(d.get("r", 3)),
            m=int(d.get("m", 0)),
            linear_radius=float(d.get("linear_radius", 1.0)),
        )


# ---------------------------------------------------------------------------
# identities


@dataclass
class ModelIdentityReport:
    """Measured defects of the model identities (exact when inputs are rational)."""

    bc_defect: object
    c_inverse_b_defect: object
    symmetry_defect: object
    incidence_residual: object
    tol: float

    @property
    def bc(self):
        return abs(self.bc_defect) <= self.tol

    @property
    def c_inverse_b(self):
        return abs(self.c_inverse_b_defect) <= self.tol

    @property
    def symmetric(self):
        return abs(self.symmetry_defect) <= self.tol

    @property
    def incidence(self):
        return abs(self.incidence_residual) <= self.tol

    @property
    def passed(self):
        return self.bc and self.c_inverse_b and self.symmetric and self.incidence


def _exact(v):
    return isinstance(v, (int, Fraction))


def check_model_identities(model, tol=None):
    """``b c = -1``, ``c + 1/b = 0``, symmetry of ``C`` and the incidence ``M^u -> M^s``.

    With rational model data the defects are exact and ``tol`` defaults to 0;
    otherwise it defaults to 1e-12.
    """
    rational = all(_exact(v) for v in (model.a, model.b, model.c, *model.xs, *model.yu))
    if tol is None:
        tol = 0 if rational else 1e-12
    if rational:
        a, b, c = Fraction(model.a), Fraction(model.b), Fraction(model.c)
    else:
        a, b, c = float(model.a), float(model.b), float(model.c)
    bc = b * c + 1
    cb = c + 1 / b
    C = model.C_exact()
    n = model.n
    sym = max((abs(C[i][l] - C[l][i]) for i in range(n) for l in range(n)), default=0)
    if rational:
        xbar, ybar = model.transition_exact([0] * n, model.yu)
        inc = max(max(abs(xbar[i] - Fraction(model.xs[i])), abs(ybar[i])) for i in range(n))
    else:
        z = np.concatenate([np.zeros(n), np.asarray(model.yu, float)])[None, :]
        out = model.transition(z)[0]
        inc = float(np.max(np.abs(out - np.concatenate([np.asarray(model.xs, float), np.zeros(n)]))))
    return ModelIdentityReport(bc, cb, sym, inc, tol)


# ---------------------------------------------------------------------------
# scales


@dataclass(frozen=True)
class RenormParams:
    """Scale ``nu`` snapped so that ``b nu^r = e^{-j tau}`` for the integer ``j``."""

    nu: float
    j: int
    requested_nu: float
    residual: float

    def box(self, model):
        """``B_j``: centre ``(x^s, e^{-j tau} y^u)``, half-widths ``(2 nu, 2 nu^{r+1})``."""
        centre = np.concatenate(
            [np.asarray(model.xs, float), math.exp(-self.j * model.tau) * np.asarray(model.yu, float)]
        )
        half = np.concatenate([np.full(model.n, 2 * self.nu), np.full(model.n, 2 * self.nu ** (model.r + 1))])
        return centre, half


def snap_nu(model, nu):
    """Nearest admissible scale: ``j = round(-log(b nu^r) / tau)``, ``nu = (e^{-j tau}/b)^{1/r}``."""
    b = float(model.b)
    if b <= 0:
        raise ValueError("the scale relation needs b > 0")
    r, tau = model.r, model.tau
    j = int(round(-math.log(b * nu**r) / tau))
    j = max(j, 1)
    nu_adj = (math.exp(-j * tau) / b) ** (1.0 / r)
    residual = abs(b * nu_adj**r - math.exp(-j * tau))
    return RenormParams(nu_adj, j, float(nu), residual)


# ---------------------------------------------------------------------------
# maps


def local_linear(model, j):
    """``j`` iterates of the linear saddle map: ``diag(e^{-j tau} I, e^{j tau} I)``."""
    j = int(j)
    if j < 0:
        raise ValueError("j must be non-negative")
    if j * model.tau > 700:
        raise OverflowError("j * tau above 700 overflows the linear map")
    n = model.n
    d = np.concatenate([np.full(n, math.exp(-j * model.tau)), np.full(n, math.exp(j * model.tau))])
    return LinearSymplectic(np.diag(d))


@register("homoclinic_transition")
@dataclass(frozen=True, eq=False)
class TransitionMap(SymplecticMap):
    """The transition from near ``M^u`` to near ``M^s``; ``nu=None`` drops the perturbation."""

    model: HomoclinicModel
    nu: float | None = None
    chart: Chart = field(default=Chart.EUCLIDEAN, init=False)
    has_analytic_jacobian = True

    @property
    def n(self):
        return self.model.n

    def _evaluate(self, z):
        return self.model.transition(z, self.nu)

    def _jacobian(self, z):
        return self.model.transition_jacobian(z, self.nu)

    def to_config(self):
        d = {"type": self.kind, "model": self.model.to_config()}
        if self.nu is not None:
            d["nu"] = float(self.nu)
        return d

    @classmethod
    def from_config(cls, d):
        return cls(HomoclinicModel.from_config(d["model"]), d.get("nu"))


def transition_map(model, nu=None):
    return TransitionMap(model, nu)


def _check_box(model, params):
    n = model.n
    xs = np.asarray(model.xs, float)
    yu = np.asarray(model.yu, float)
    R = model.linear_radius
    ybox = 2 * params.nu / float(model.b)
    if np.max(np.abs(xs)) + 2 * params.nu > R or np.max(np.abs(yu)) + ybox > R:
        raise BoxOutsideLinearization(
            f"return box at nu={params.nu:.3g} reaches outside the linear neighbourhood of radius {R}"
        )
    return n


@register("homoclinic_return")
@dataclass(frozen=True, eq=False)
class ReturnMap(SymplecticMap):
    """Return map ``T o F^j`` near ``M^s`` in the coordinates ``X = x - x^s``, ``Y = e^{j tau} y - y^u``.

    With ``rescaled=True`` the coordinates are further scaled,
    ``X = nu X'``, ``Y = nu Y' / b``.
    """

    model: HomoclinicModel
    params: RenormParams
    rescaled: bool = False
    perturbed: bool = True
    chart: Chart = field(default=Chart.EUCLIDEAN, init=False)
    has_analytic_jacobian = True

    def __post_init__(self):
        _check_box(self.model, self.params)

    @property
    def n(self):
        return self.model.n

    def _scales(self):
        n = self.n
        nu, b = self.params.nu, float(self.model.b)
        if self.rescaled:
            return np.concatenate([np.full(n, nu), np.full(n, nu / b)])
        return np.ones(2 * n)

    def _to_transition_input(self, z):
        n = self.n
        s = self._scales()
        XY = z * s
        xs = np.asarray(self.model.xs, float)
        yu = np.asarray(self.model.yu, float)
        e = math.exp(-self.params.j * self.model.tau)
        # F^j applied to (x^s + X, e^{-j tau}(y^u + Y))
        return np.concatenate([e * (xs + XY[:, :n]), yu + XY[:, n:]], axis=-1)

    def _evaluate(self, z):
        n = self.n
        w = self._to_transition_input(z)
        out = self.model.transition(w, self.params.nu if self.perturbed else None)
        xs = np.asarray(self.model.xs, float)
        yu = np.asarray(self.model.yu, float)
        E = math.exp(self.params.j * self.model.tau)
        XY = np.concatenate([out[:, :n] - xs, E * out[:, n:] - yu], axis=-1)
        return XY / self._scales()

    def _jacobian(self, z):
        n = self.n
        w = self._to_transition_input(z)
        Jt = self.model.transition_jacobian(w, self.params.nu if self.perturbed else None)
        s = self._scales()
        e = math.exp(-self.params.j * self.model.tau)
        din = np.concatenate([np.full(n, e), np.ones(n)]) * s
        dout = np.concatenate([np.ones(n), np.full(n, 1.0 / e)]) / s
        return dout[None, :, None] * Jt * din[None, None, :]

    def to_config(self):
        return {
            "type": self.kind,
            "model": self.model.to_config(),
            "nu": self.params.nu,
            "rescaled": self.rescaled,
        }

    @classmethod
    def from_config(cls, d):
        model = HomoclinicModel.from_config(d["model"])
        return cls(model, snap_nu(model, float(d["nu"])), bool(d.get("rescaled", False)))


def return_map(model, params, perturbed=True):
    return ReturnMap(model, params, rescaled=False, perturbed=perturbed)


def rescaled_return(model, params, perturbed=True):
    return ReturnMap(model, params, rescaled=True, perturbed=perturbed)


def henon_limit(model, tol=1e-10):
    """``HenonLike`` with potential ``V - 0.5 <Y, C Y>``.

    Raises
    ------
    AsymmetricC
        If ``C`` is not symmetric within ``tol``.
    """
    C = model.C_matrix()
    defect = float(np.max(np.abs(C - C.T))) if C.size else 0.0
    if defect > tol:
        raise AsymmetricC(f"C is not symmetric (defect {defect:.3e})")
    Vhat = model.V - Polynomial.quadratic_form(0.5 * (C + C.T))
    return HenonLike(Vhat)


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceReport:
    nus: np.ndarray
    js: np.ndarray
    distances: np.ndarray
    slope: float | None
    residual: float | None
    monotone: bool
    grid: int

    def table(self, delimiter=","):
        lines = [delimiter.join(["nu", "j", "distance"])]
        for nu, j, d in zip(self.nus, self.js, self.distances):
            lines.append(delimiter.join([repr(float(nu)), str(int(j)), repr(float(d))]))
        return "\n".join(lines) + "\n"


def _grid(n, per_axis, radius=2.0):
    axis = np.linspace(-radius, radius, per_axis)
    g = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    return np.stack([v.ravel() for v in g], axis=-1)


def _sup_distance(args):
    model, nu, per_axis = args
    params = snap_nu(model, nu)
    R = rescaled_return(model, params)
    L = henon_limit(model)
    Z = _grid(model.n, per_axis)
    return params, float(np.max(np.abs(R(Z) - L(Z))))


def convergence_check(model, nu_list, grid=33, workers=1, jitter=0.05):
    """Sup-distance between the rescaled return map and the limit on ``[-2, 2]^{2n}``.

    Fits the slope of ``log distance`` against ``log nu``; ``monotone`` allows
    ``jitter`` relative increase when ``nu`` decreases.

    Raises
    ------
    InsufficientPoints
        Fewer than two scales.
    """
    if len(nu_list) < 2:
        raise InsufficientPoints("at least two scales are needed for a slope")
    results = parallel_map(_sup_distance, [(model, float(nu), int(grid)) for nu in nu_list], workers)
    params = [p for p, _ in results]
    dist = np.array([d for _, d in results])
    nus = np.array([p.nu for p in params])
    js = np.array([p.j for p in params])
    order = np.argsort(-nus)
    nus, js, dist = nus[order], js[order], dist[order]
    monotone = bool(np.all(dist[1:] <= dist[:-1] * (1 + jitter) + 1e-15))
    slope = residual = None
    if np.all(dist > 1e-11):
        coef, res, *_ = np.polyfit(np.log(nus), np.log(dist), 1, full=True)
        slope = float(coef[0])
        residual = float(res[0]) if len(res) else 0.0
    return ConvergenceReport(nus, js, dist, slope, residual, monotone, int(grid))
