"""Rescaling near an elliptic point and the shear-to-rotation linear maps."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import DegenerateTwist
from ..maps import EllipticNormalForm, IntegrableTwist, LinearSymplectic, reduce_mod1
from ..polynomial import Polynomial


@dataclass(frozen=True)
class RescaledTwist:
    """Integrable models obtained from the normal form for a given ``s``.

    Attributes
    ----------
    step : IntegrableTwist
        One iterate: ``(theta, r) -> (theta + alpha_tilde + Omega r / s, r)``.
    iterate : IntegrableTwist
        ``s`` iterates: ``(theta, r) -> (theta + s alpha_tilde + Omega r, r)``.
    alpha_tilde : ndarray
        ``alpha_hat + eps^2 sum_m omega_km`` (mod 1), ``eps = s^{-3/7}``.
    eps : float
    residual_order : str
        Symbolic size of the neglected remainder of the ``s``-th iterate.
    residual_scale : float
        ``s^{-1/7}``.
    """

    step: IntegrableTwist
    iterate: IntegrableTwist
    alpha_tilde: np.ndarray
    eps: float
    s: int
    residual_order: str
    residual_scale: float


def _twist_polynomial(omega):
    """``Q(r) = 0.5 r^T Omega r`` so that ``grad Q = Omega r`` (``Omega`` symmetric)."""
    return Polynomial.quadratic_form(omega)


def elliptic_rescale(nf: EllipticNormalForm, s: int, eps=None, det_tol=1e-12):
    """Twist approximation of the normal form near the elliptic point.

    Parameters
    ----------
    nf : EllipticNormalForm
        Frequencies ``alpha_hat`` and twist matrix ``omega`` in turns.
    s : int
        Iteration count; the scale is ``eps = s^{-3/7}`` unless given.
    det_tol : float
        Threshold on ``|det omega|`` for the twist condition.

    Raises
    ------
    DegenerateTwist
        When ``|det omega| < det_tol``.
    """
    omega = np.asarray(nf.omega, dtype=float)
    if abs(np.linalg.det(omega)) < det_tol:
        raise DegenerateTwist(f"|det omega| = {abs(np.linalg.det(omega)):.3e} below {det_tol:g}")
    s = int(s)
    if eps is None:
        eps = float(s) ** (-3.0 / 7.0)
    alpha_tilde = reduce_mod1(nf.alpha_hat + eps**2 * omega.sum(axis=1))
    step = IntegrableTwist(alpha_tilde, _twist_polynomial(omega / s))
    iterate = IntegrableTwist(reduce_mod1(s * alpha_tilde), _twist_polynomial(omega))
    return RescaledTwist(
        step=step,
        iterate=iterate,
        alpha_tilde=alpha_tilde,
        eps=eps,
        s=s,
        residual_order="O(s^(-1/7))",
        residual_scale=float(s) ** (-1.0 / 7.0),
    )


@dataclass(frozen=True)
class ShearToRotation:
    """``(x, y) -> ((1 - eps) x + R y, -eps R^{-1} x + y)`` with ``eps = 2(1 - cos 2 pi / s)``.

    ``exact`` holds the matrix as nested lists of :class:`~fractions.Fraction`
    when ``eps`` is rational (``s`` in {1, 2, 3, 4, 6}), otherwise ``None``.
    """

    R: tuple
    s: int
    eps: float
    M: np.ndarray
    exact: tuple | None

    @property
    def n(self):
        return len(self.R)

    def as_map(self, chart="euclidean"):
        return LinearSymplectic(self.M, chart=chart)

    def exact_power(self, k):
        if self.exact is None:
            raise ValueError("matrix entries are irrational for this s")
        return matpow_exact(self.exact, k)


_RATIONAL_EPS = {1: Fraction(0), 2: Fraction(4), 3: Fraction(3), 4: Fraction(2), 6: Fraction(1)}


def shear_to_rotation(R, s):
    """Build the shear-to-rotation matrix for the diagonal signs ``R`` and order ``s >= 3``."""
    s = int(s)
    if s < 3:
        raise ValueError("s must be at least 3")
    R = tuple(int(v) for v in np.atleast_1d(R))
    if any(v not in (1, -1) for v in R):
        raise ValueError("R must have entries +-1")
    n = len(R)
    eps = 2.0 * (1.0 - np.cos(2.0 * np.pi / s))
    Rm = np.diag(np.asarray(R, float))
    M = np.block([[(1.0 - eps) * np.eye(n), Rm], [-eps * np.linalg.inv(Rm), np.eye(n)]])
    exact = None
    if s in _RATIONAL_EPS:
        e = _RATIONAL_EPS[s]
        rows = []
        for i in range(2 * n):
            row = []
            for j in range(2 * n):
                if i < n and j < n:
                    v = (1 - e) if i == j else Fraction(0)
                elif i < n:
                    v = Fraction(R[i]) if j - n == i else Fraction(0)
                elif j < n:
                    v = -e * Fraction(R[i - n]) if j == i - n else Fraction(0)  # R^{-1} = R
                else:
                    v = Fraction(1) if i == j else Fraction(0)
                row.append(v)
            rows.append(tuple(row))
        exact = tuple(rows)
        M = np.array([[float(v) for v in row] for row in exact])
    return ShearToRotation(R=R, s=s, eps=float(eps) if exact is None else float(_RATIONAL_EPS[s]), M=M, exact=exact)


def matmul_exact(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return tuple(tuple(sum((A[i][k] * B[k][j] for k in range(m)), Fraction(0)) for j in range(p)) for i in range(n))


def matpow_exact(A, k):
    n = len(A)
    out = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
    for _ in range(int(k)):
        out = matmul_exact(out, A)
    return out


def is_identity_exact(A):
    return all(A[i][j] == (1 if i == j else 0) for i in range(len(A)) for j in range(len(A)))


def symplectic_defect_exact(A):
    """``A^T Omega A - Omega`` entries, exactly."""
    m = len(A)
    n = m // 2
    Om = tuple(
        tuple(Fraction(1 if (j == i + n) else (-1 if i == j + n else 0)) for j in range(m)) for i in range(m)
    )
    At = tuple(tuple(A[j][i] for j in range(m)) for i in range(m))
    P = matmul_exact(matmul_exact(At, Om), A)
    return max(abs(P[i][j] - Om[i][j]) for i in range(m) for j in range(m))
