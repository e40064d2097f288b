"""Generating functions near an invariant torus and their Birkhoff normalization.

A generating function ``S(tb, r) = alpha.r + Q(r) + s(tb, r)`` defines the map
``(theta, r) -> (tb, rb)`` implicitly through

    tb = theta + d_r S(tb, r),      rb = r - d_tb S(tb, r),

with angles in turns, so ``d_theta exp(2 pi i m.theta) = 2 pi i m exp(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import (
    DomainViolation,
    ImplicitSolveDivergence,
    NotNormalized,
    SmallDivisorBreakdown,
)
from ..maps import Chart, SymplecticMap, register
from ..polynomial import Polynomial
from .diophantine import FrequencyVector, diophantine_margin, small_divisors
from .fourier import FourierPoly, JetSpace, compose

TWO_PI = 2.0 * np.pi


# ----------------------------------------------------------------------------
# cutoff profile


def _smoothstep(t):
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _smoothstep_d1(t):
    return 30.0 * t**2 * (1.0 - t) ** 2


def _smoothstep_d2(t):
    return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


def cutoff(u):
    """Polynomial bump: 1 on ``|u| <= 1``, 0 on ``|u| >= 2``, C^2 quintic in between."""
    t = np.clip(np.abs(u) - 1.0, 0.0, 1.0)
    return 1.0 - _smoothstep(t)


def cutoff_derivatives(u):
    """``(kappa, kappa', kappa'')`` at ``u >= 0``."""
    u = np.abs(u)
    t = np.clip(u - 1.0, 0.0, 1.0)
    inside = (u > 1.0) & (u < 2.0)
    return (
        1.0 - _smoothstep(t),
        np.where(inside, -_smoothstep_d1(t), 0.0),
        np.where(inside, -_smoothstep_d2(t), 0.0),
    )


# ----------------------------------------------------------------------------
# generating function data


@dataclass(frozen=True, eq=False)
class GeneratingFunction:
    """``S(tb, r) = alpha.r + Q(r) + (1 - kappa(|r|/delta)) s(tb, r)``.

    Attributes
    ----------
    alpha : FrequencyVector
    Q : Polynomial
        Polynomial part in ``r`` with ``grad Q(0) = 0``.
    remainder : FourierPoly
        Angle-dependent remainder ``s``.
    D : int
        Degree through which the generating function is normalized
        (``-1`` when nothing is known).
    delta : float or None
        Cutoff radius; ``None`` means no cutoff.
    changes : tuple of FourierPoly
        Hamiltonians whose time-1 maps were applied as changes of variables,
        in order of application.
    """

    alpha: FrequencyVector
    Q: Polynomial
    remainder: FourierPoly
    D: int = -1
    delta: float | None = None
    changes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.alpha, FrequencyVector):
            object.__setattr__(self, "alpha", FrequencyVector.of(self.alpha))
        n = self.alpha.n
        if self.Q.nvars != n or self.remainder.n != n:
            raise ValueError("dimension mismatch between alpha, Q and remainder")
        if any(sum(e) <= 1 and c != 0 for e, c in self.Q.terms.items() if sum(e) == 1):
            raise ValueError("grad Q(0) must vanish")

    @property
    def n(self):
        return self.alpha.n

    def oscillating_mass(self, degree):
        return self.remainder.mass(degree=degree, oscillating_only=True)

    def to_config(self):
        d = {
            "alpha": list(self.alpha.alpha),
            "Q": self.Q.to_config(),
            "remainder": self.remainder.to_config(),
            "D": int(self.D),
        }
        if self.delta is not None:
            d["delta"] = float(self.delta)
        return d

    @classmethod
    def from_config(cls, d):
        return cls(
            alpha=FrequencyVector.of(d["alpha"]),
            Q=Polynomial.from_config(d["Q"]),
            remainder=FourierPoly.from_config(d["remainder"]),
            D=int(d.get("D", -1)),
            delta=d.get("delta"),
        )


def _remainder_derivatives(S, theta, r):
    """Derivatives of ``(1 - kappa(|r|/delta)) s`` (see :meth:`FourierPoly.derivatives`)."""
    out = S.remainder.derivatives(theta, r)
    if S.delta is None:
        return out
    r = np.atleast_2d(r)
    n = S.n
    norm = np.linalg.norm(r, axis=1)
    u = norm / S.delta
    kap, kap1, kap2 = cutoff_derivatives(u)
    w = 1.0 - kap
    safe = np.where(norm > 0, norm, 1.0)
    du = r / (safe[:, None] * S.delta)
    eye = np.eye(n)[None]
    d2u = (eye / safe[:, None, None] - r[:, :, None] * r[:, None, :] / safe[:, None, None] ** 3) / S.delta
    w_r = -kap1[:, None] * du
    w_rr = -kap2[:, None, None] * du[:, :, None] * du[:, None, :] - kap1[:, None, None] * d2u
    v, st, sr, stt, s_tr, srr = (out[k] for k in ("v", "t", "r", "tt", "tr", "rr"))
    return {
        "v": w * v,
        "t": w[:, None] * st,
        "r": w_r * v[:, None] + w[:, None] * sr,
        "tt": w[:, None, None] * stt,
        "tr": st[:, :, None] * w_r[:, None, :] + w[:, None, None] * s_tr,
        "rr": w_rr * v[:, None, None]
        + w_r[:, :, None] * sr[:, None, :]
        + sr[:, :, None] * w_r[:, None, :]
        + w[:, None, None] * srr,
    }


def _solve_angles(S, theta, r, tol=1e-12, maxiter=50):
    """Newton solve of ``tb = theta + alpha + grad Q(r) + d_r s(tb, r)`` on the lift."""
    alpha = S.alpha.as_array()
    base = theta + alpha + (S.Q.gradient(r) if not S.Q.is_zero else 0.0)
    tb = base.copy()
    n = S.n
    eye = np.eye(n)[None]
    active = np.ones(len(tb), dtype=bool)
    extra = np.zeros(len(tb), dtype=int)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        d = _remainder_derivatives(S, tb[idx], r[idx])
        F = tb[idx] - base[idx] - d["r"]
        J = eye - np.swapaxes(d["tr"], 1, 2)  # d(d_r s)_i / d tb_j = tr[j, i]
        step = np.linalg.solve(J, F[..., None])[..., 0]
        size = np.max(np.abs(step), axis=1) if n else np.zeros(len(idx))
        damp = np.minimum(1.0, 0.5 / np.maximum(size, 1e-300))
        tb[idx] -= damp[:, None] * step
        done = size < tol
        # one polishing step after reaching tolerance
        extra[idx[done]] += 1
        active[idx[done & (extra[idx] >= 2)]] = False
        if not np.all(np.isfinite(tb)):
            raise ImplicitSolveDivergence("non-finite iterate in generating-function solve")
    if np.any(active):
        d = _remainder_derivatives(S, tb[active], r[active])
        res = np.max(np.abs(tb[active] - base[active] - d["r"]))
        if not res < tol:
            raise ImplicitSolveDivergence(f"Newton did not converge (residual {res:.3e}) in {maxiter} iterations")
    return tb


@register("generating_function")
@dataclass(frozen=True, eq=False)
class GeneratingFunctionMap(SymplecticMap):
    """Exact symplectic map defined implicitly by a :class:`GeneratingFunction`."""

    S: GeneratingFunction
    radius: float = 1.0
    tol: float = 1e-12
    maxiter: int = 50
    chart: Chart = field(default=Chart.TORUS_ANNULUS, init=False)
    has_analytic_jacobian = True

    @property
    def n(self):
        return self.S.n

    def _check(self, z):
        r = z[:, self.n:]
        if np.any(np.max(np.abs(r), axis=1) > self.radius):
            raise DomainViolation(f"|r| exceeds the solve radius {self.radius}")

    def _evaluate(self, z):
        self._check(z)
        n = self.n
        theta, r = z[:, :n], z[:, n:]
        tb = _solve_angles(self.S, theta, r, self.tol, self.maxiter)
        d = _remainder_derivatives(self.S, tb, r)
        return np.concatenate([tb, r - d["t"]], axis=-1)

    def _jacobian(self, z):
        self._check(z)
        n = self.n
        theta, r = z[:, :n], z[:, n:]
        tb = _solve_angles(self.S, theta, r, self.tol, self.maxiter)
        d = _remainder_derivatives(self.S, tb, r)
        g_tb = np.swapaxes(d["tr"], 1, 2)  # d g_i / d tb_j, g = grad_r S
        hq = self.S.Q.hessian(r) if not self.S.Q.is_zero else np.zeros((len(z), n, n))
        g_r = hq + d["rr"]
        h_tb = d["tt"]  # h = d_tb s
        h_r = d["tr"]
        Ainv = np.linalg.inv(np.eye(n)[None] - g_tb)
        dtb_dth = Ainv
        dtb_dr = Ainv @ g_r
        J = np.empty((len(z), 2 * n, 2 * n))
        J[:, :n, :n] = dtb_dth
        J[:, :n, n:] = dtb_dr
        J[:, n:, :n] = -h_tb @ dtb_dth
        J[:, n:, n:] = np.eye(n)[None] - h_tb @ dtb_dr - h_r
        return J

    def to_config(self):
        return {"type": self.kind, "S": self.S.to_config(), "radius": float(self.radius)}

    @classmethod
    def from_config(cls, d):
        return cls(GeneratingFunction.from_config(d["S"]), radius=float(d.get("radius", 1.0)))


@register("hamiltonian_flow")
@dataclass(frozen=True, eq=False)
class HamiltonianFlow(SymplecticMap):
    """Time-``t`` map of the Hamiltonian ``H(theta, r)`` (a :class:`FourierPoly`).

    ``theta' = d_r H``, ``r' = -d_theta H``; integrated with DOP853 together with
    the variational equations when a Jacobian is requested.
    """

    H: FourierPoly
    t: float = 1.0
    rtol: float = 1e-13
    atol: float = 1e-15
    chart: Chart = field(default=Chart.TORUS_ANNULUS, init=False)
    has_analytic_jacobian = True

    @property
    def n(self):
        return self.H.n

    def _rhs(self, P, with_var):
        n = self.n

        def rhs(_, y):
            Z = y[: P * 2 * n].reshape(P, 2 * n)
            d = self.H.derivatives(Z[:, :n], Z[:, n:])
            dz = np.concatenate([d["r"], -d["t"]], axis=1).ravel()
            if not with_var:
                return dz
            X = y[P * 2 * n:].reshape(P, 2 * n, 2 * n)
            A = np.zeros((P, 2 * n, 2 * n))
            A[:, :n, :n] = np.swapaxes(d["tr"], 1, 2)
            A[:, :n, n:] = d["rr"]
            A[:, n:, :n] = -d["tt"]
            A[:, n:, n:] = -d["tr"]
            return np.concatenate([dz, (A @ X).ravel()])

        return rhs

    def _flow(self, z, with_var):
        P = len(z)
        dim = 2 * self.n
        if self.H.is_zero or self.t == 0:
            J = np.tile(np.eye(dim), (P, 1, 1))
            return z.copy(), J
        y0 = z.ravel()
        if with_var:
            y0 = np.concatenate([y0, np.tile(np.eye(dim), (P, 1, 1)).ravel()])
        sol = solve_ivp(self._rhs(P, with_var), (0.0, self.t), y0, method="DOP853", rtol=self.rtol, atol=self.atol)
        if not sol.success:
            raise ImplicitSolveDivergence(f"flow integration failed: {sol.message}")
        y = sol.y[:, -1]
        Z = y[: P * dim].reshape(P, dim)
        J = y[P * dim:].reshape(P, dim, dim) if with_var else None
        return Z, J

    def _evaluate(self, z):
        return self._flow(z, False)[0]

    def _jacobian(self, z):
        return self._flow(z, True)[1]

    def inverse(self):
        return HamiltonianFlow(self.H, -self.t, self.rtol, self.atol)

    def to_config(self):
        return {"type": self.kind, "H": self.H.to_config(), "t": float(self.t)}

    @classmethod
    def from_config(cls, d):
        return cls(FourierPoly.from_config(d["H"]), float(d.get("t", 1.0)))


@register("coordinate_change")
@dataclass(frozen=True, eq=False)
class NormalizedMap(SymplecticMap):
    """``Phi o f o Phi^{-1}`` where ``Phi`` is the composition of the recorded flows."""

    inner: SymplecticMap
    changes: tuple

    @property
    def n(self):
        return self.inner.n

    @property
    def chart(self):
        return self.inner.chart

    has_analytic_jacobian = False

    def forward(self, z):
        for H in self.changes:
            z = HamiltonianFlow(H, 1.0)(z)
        return z

    def backward(self, z):
        for H in reversed(self.changes):
            z = HamiltonianFlow(H, -1.0)(z)
        return z

    def _evaluate(self, z):
        return self.forward(self.inner(self.backward(z)))

    def to_config(self):
        return {"type": self.kind, "inner": self.inner.to_config(), "changes": [H.to_config() for H in self.changes]}

    @classmethod
    def from_config(cls, d):
        from ..maps import map_from_config

        return cls(map_from_config(d["inner"]), tuple(FourierPoly.from_config(h) for h in d["changes"]))


# ----------------------------------------------------------------------------
# homological equation


def solve_homological(omega_hat, alpha, divisor_floor=1e-10):
    """Solve ``Qh(theta + alpha) = Qh(theta) - Oh(theta + alpha)`` mode by mode.

    ``omega_hat`` holds the Fourier coefficients of ``Oh(theta, r)`` (as a
    function of the unshifted angle). The solution is
    ``q_m = e_m / (1 - e_m) * omega_m`` with ``e_m = exp(2 pi i <m, alpha>)``.

    Raises
    ------
    SmallDivisorBreakdown
        If some stored mode has ``|1 - e_m|`` below ``divisor_floor``.
    ValueError
        If ``omega_hat`` has a non-zero mean.
    """
    a = FrequencyVector.of(alpha).as_array() if not isinstance(alpha, FrequencyVector) else alpha.as_array()
    if omega_hat.is_zero:
        return FourierPoly.zero(omega_hat.n)
    if omega_hat.mass(oscillating_only=False) > 0 and omega_hat.mean().mass(oscillating_only=False) > 0:
        raise ValueError("the right-hand side must have zero mean in theta")
    modes = omega_hat.modes
    div = small_divisors(modes, a)
    bad = div < divisor_floor
    if np.any(bad):
        raise SmallDivisorBreakdown([tuple(m) for m in modes[bad]], divisor_floor)
    e = np.exp(2j * np.pi * (modes @ a))
    factor = e / (1.0 - e)
    return FourierPoly(omega_hat.n, modes, omega_hat.exps, omega_hat.coef * factor[:, None])


def homological_residual(q_hat, omega_hat, alpha, grid=256, r=None):
    """Max of ``|Qh(theta+alpha) - Qh(theta) + Oh(theta+alpha)|`` on an angle grid."""
    n = q_hat.n
    a = np.asarray(alpha, float).reshape(n)
    if r is None:
        r = np.full(n, 0.5)
    axes = [np.arange(grid) / grid] * n if n == 1 else [np.arange(int(round(grid ** (1.0 / n)))) / round(grid ** (1.0 / n))] * n
    theta = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    rr = np.broadcast_to(np.asarray(r, float), theta.shape)
    res = q_hat(theta + a, rr) - q_hat(theta, rr) + omega_hat(theta + a, rr)
    return float(np.max(np.abs(res)))


# ----------------------------------------------------------------------------
# jets of maps and generating functions


def _default_grid(n, max_mode):
    if n == 1:
        return max(64, 4 * (max_mode + 1))
    return max(16, 2 * (max_mode + 2))


def map_jets(S, space):
    """Jets ``(U, W)`` of the map: ``tb = theta + alpha + U``, ``rb = r + W``."""
    n = S.n
    alpha = S.alpha.as_array()
    s = space.from_fourier(S.remainder)
    s_r = [s.dr(i).shift(alpha) for i in range(n)]
    s_t = [s.dtheta(i).shift(alpha) for i in range(n)]
    gradQ = [space.from_polynomial(S.Q.derivative(i)) for i in range(n)]
    U = [g.copy() for g in gradQ]
    for _ in range(space.dmax + 1):
        U = [gradQ[i] + compose(s_r[i], U) for i in range(n)]
    W = [-compose(s_t[i], U) for i in range(n)]
    return U, W


def lie_flow_jets(H, space, time=1.0):
    """Jets ``(A, B)`` of the time-``time`` map: ``theta + A``, ``r + B``."""
    n = space.n
    h = space.from_fourier(H) * time
    h_t = [h.dtheta(i) for i in range(n)]
    h_r = [h.dr(i) for i in range(n)]

    def lie(g):
        out = space.zero()
        for j in range(n):
            out = out + g.dtheta(j) * h_r[j] - g.dr(j) * h_t[j]
        return out

    A, B = [], []
    for i in range(n):
        for first, comps in ((h_r[i], A), (-h_t[i], B)):
            term = first
            total = first.copy()
            for k in range(2, space.dmax + 2):
                term = lie(term) * (1.0 / k)
                if term.low_degree() is None:
                    break
                total = total + term
            comps.append(total)
    return A, B


def compose_maps(outer, inner, alpha_inner, space):
    """Jets of ``outer o inner`` where maps are ``(theta + a + A, r + B)``.

    ``outer`` and ``inner`` are ``(A, B)`` pairs; ``alpha_inner`` is the constant
    rotation of ``inner``. Constant rotations add, so the caller tracks the
    rotation of the result separately.
    """
    Ao, Bo = outer
    Ai, Bi = inner
    n = space.n
    A = [Ai[i] + compose(Ao[i].shift(alpha_inner), Ai, Bi) for i in range(n)]
    B = [Bi[i] + compose(Bo[i].shift(alpha_inner), Ai, Bi) for i in range(n)]
    return A, B


def generating_from_jets(U, W, alpha, space, normalized_degree, max_mode, drop):
    """Recover ``(Q, s)`` from map jets ``tb = theta + alpha + U``, ``rb = r + W``.

    ``Q`` receives the angle-mean through ``normalized_degree``; everything else
    (including angle-independent terms of higher degree) goes to the remainder.
    Returns ``(Q, remainder, exactness_defect)``.
    """
    n = space.n
    Us = [u.shift(-alpha) for u in U]
    Ws = [w.shift(-alpha) for w in W]
    Ut = [u.copy() for u in Us]
    for _ in range(space.dmax + 1):
        neg = [-u for u in Ut]
        Ut = [compose(Us[i], neg) for i in range(n)]
    neg = [-u for u in Ut]
    Wt = [compose(Ws[i], neg) for i in range(n)]
    # d_r S = alpha + Ut, d_tb S = -Wt
    N = space.grid
    axes = tuple(range(1, 1 + n))
    ks = np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)
    FW = [np.fft.fftn(w.data, axes=axes) / N**n for w in Wt]
    FU = [np.fft.fftn(u.data, axes=axes) / N**n for u in Ut]
    table = {}
    limit = min(max_mode, N // 2 - 1)
    mean_grad = [np.real(FU[i][(slice(None),) + (0,) * n]) for i in range(n)]
    # mean part by Euler's identity on each homogeneous piece
    mean_terms = {}
    for l, e in enumerate(space.monos):
        for i in range(n):
            c = mean_grad[i][l]
            if c == 0:
                continue
            ne = list(e)
            ne[i] += 1
            ne = tuple(ne)
            mean_terms[ne] = mean_terms.get(ne, 0.0) + c / sum(ne)
    Q_terms = {e: c for e, c in mean_terms.items() if sum(e) <= normalized_degree}
    for e, c in mean_terms.items():
        if sum(e) > normalized_degree and sum(e) <= space.dmax and abs(c) > drop:
            table[((0,) * n, e)] = complex(c)
    # oscillating part from d_tb s = -Wt
    grid_idx = np.stack(np.meshgrid(*([np.arange(N)] * n), indexing="ij"), -1).reshape(-1, n)
    defect = 0.0
    for flat in grid_idx:
        m = ks[flat]
        if not np.any(m) or np.max(np.abs(m)) > limit:
            continue
        j = int(np.argmax(np.abs(m)))
        for l, e in enumerate(space.monos):
            c = -FW[j][(l,) + tuple(flat)] / (1j * TWO_PI * m[j])
            if abs(c) > drop:
                table[(tuple(int(v) for v in m), e)] = c
    # exactness diagnostic: d_r s versus the oscillating part of Ut
    rem = FourierPoly.from_table(n, table)
    s_jet = space.from_fourier(rem.oscillating())
    for i in range(n):
        osc = Ut[i] - Ut[i].mean()
        defect = max(defect, (osc - s_jet.dr(i)).max_abs())
    Q = Polynomial(n, {e: c for e, c in Q_terms.items() if abs(c) > drop})
    return Q, rem, defect


def bnf_step(
    S, degree, divisor_floor=1e-10, max_mode=32, drop=1e-15, grid=None, pre_tol=1e-12, witness=None, dmax=None
):
    """One Birkhoff normalization step: remove angle-dependent terms of degree ``degree + 2``.

    Parameters
    ----------
    S : GeneratingFunction
        Normalized through degree ``degree + 1``.
    degree : int
        The step index ``d``; the homological equation is solved at ``d + 2``.
    divisor_floor : float
        Minimal admissible ``|1 - exp(2 pi i <m, alpha>)|``.
    max_mode : int
        Fourier truncation ``||m||_inf <= max_mode``.
    drop : float
        Coefficients with modulus below this are discarded.
    grid : int, optional
        Angle samples per dimension for the jet algebra.
    pre_tol : float
        Tolerance for the "already normalized below" precondition.
    witness : tuple (gamma, tau, K), optional
        When given, ``alpha`` must pass :func:`diophantine_margin`.
    dmax : int, optional
        Truncation degree of the jet algebra (default: the largest degree
        present, and at least ``degree + 2``).

    Returns
    -------
    GeneratingFunction
        New generating function, with the Hamiltonian of the change of
        variables appended to ``changes``.
    """
    d = int(degree)
    target = d + 2
    n = S.n
    low = [deg for deg in range(target) if S.oscillating_mass(deg) > pre_tol]
    if low:
        raise NotNormalized(f"angle-dependent terms of degree {low} remain below degree {target}")
    if witness is not None:
        gamma, tau, K = witness
        w = diophantine_margin(S.alpha, tau, K)
        if not w.certifies(gamma):
            raise SmallDivisorBreakdown([w.argmin], gamma)
    if S.delta is not None:
        raise ValueError("normalize before truncating with a cutoff")
    omega_hat = S.remainder.degree_part(target).oscillating()
    omega_mean = S.remainder.degree_part(target).mean()
    alpha = S.alpha.as_array()
    q_hat = solve_homological(omega_hat, S.alpha, divisor_floor)
    if dmax is None:
        dmax = max(S.remainder.degrees + [S.Q.degree, target])
    dmax = max(int(dmax), target)
    if q_hat.is_zero:
        # nothing to remove: absorb the angle mean into Q
        Q = S.Q + omega_mean.mean_polynomial()
        rem = S.remainder - omega_mean
        return GeneratingFunction(S.alpha, Q, rem, D=max(S.D, d), delta=None, changes=S.changes)
    if grid is None:
        grid = _default_grid(n, max(max_mode, S.remainder.max_mode))
    space = JetSpace(n, dmax, grid)
    U, W = map_jets(S, space)
    # f' = Phi o f o Phi^{-1}
    inv = lie_flow_jets(q_hat, space, -1.0)
    fwd = lie_flow_jets(q_hat, space, 1.0)
    zero = np.zeros(n)
    A1, B1 = compose_maps((U, W), inv, zero, space)  # f o Phi^{-1}, rotation alpha
    A2, B2 = compose_maps(fwd, (A1, B1), alpha, space)
    Q_new, rem, _ = generating_from_jets(A2, B2, alpha, space, target, max_mode, drop)
    return GeneratingFunction(S.alpha, Q_new, rem, D=max(S.D, d), delta=None, changes=S.changes + (q_hat,))


def normalize(S, D, **kwargs):
    """Apply :func:`bnf_step` for ``d = 0 .. D-1`` keeping terms through degree ``D + 2``."""
    kwargs.setdefault("dmax", D + 2)
    for d in range(D):
        S = bnf_step(S, d, **kwargs)
    return S


def truncate_generating(S, delta):
    """Multiply the remainder by ``1 - kappa(|r| / delta)``; ``Q`` is untouched."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return GeneratingFunction(S.alpha, S.Q, S.remainder, D=S.D, delta=float(delta), changes=S.changes)


def oscillation_profile(fmap, r_values, n_theta=64, directions=None):
    """``sup_theta |rb - r|`` at each action radius (angle-dependence of the generating function).

    For an integrable twist ``rb = r`` exactly, so this measures
    ``|d_tb s|`` on the circle of radius ``r``.
    """
    n = fmap.n
    if directions is None:
        directions = [np.ones(n) / np.sqrt(n)] if n > 1 else [np.ones(1)]
    out = []
    axes = [np.arange(n_theta) / n_theta] * n
    theta = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    for rv in r_values:
        worst = 0.0
        for dvec in directions:
            r = np.broadcast_to(rv * np.asarray(dvec, float), theta.shape)
            z = np.concatenate([theta, r], axis=1)
            img = fmap(z)
            worst = max(worst, float(np.max(np.abs(img[:, n:] - r))))
        out.append(worst)
    return np.array(out)


def loglog_slope(x, y):
    x = np.log(np.asarray(x, float))
    y = np.log(np.asarray(y, float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
