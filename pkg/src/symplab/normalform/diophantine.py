"""Diophantine arithmetic for frequency vectors (unit-circumference convention)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class FrequencyVector:
    """Frequency vector in turns, reduced mod 1.

    ``rational`` optionally holds exact :class:`~fractions.Fraction` entries when
    the frequencies are rational.
    """

    alpha: tuple
    rational: tuple | None = None

    @classmethod
    def of(cls, alpha):
        vals = np.atleast_1d(alpha)
        rational = None
        if all(isinstance(v, (Fraction, int, np.integer)) for v in vals):
            rational = tuple(Fraction(v) % 1 for v in vals)
        red = tuple(float(v) % 1.0 for v in vals)
        red = tuple(0.0 if v >= 1.0 else v for v in red)
        return cls(red, rational)

    @property
    def n(self):
        return len(self.alpha)

    def as_array(self):
        return np.asarray(self.alpha, dtype=float)


@dataclass(frozen=True)
class DiophantineWitness:
    """Finite-``K`` evidence for ``|l + <k, alpha>| >= gamma ||k||^{-(n + tau)}``.

    ``margin`` is ``min_{0 < ||k||_inf <= K} dist(<k, alpha>, Z) ||k||_inf^{n + tau}``
    and ``argmin`` the minimizing ``k``. ``norm`` records the norm used.
    """

    tau: float
    K: int
    margin: float
    argmin: tuple
    norm: str = "sup"

    def certifies(self, gamma):
        return self.margin >= gamma


def _half_space_modes(n, K):
    """Integer vectors with ``||k||_inf <= K``, one of each ``+-k`` pair."""
    axes = [np.arange(-K, K + 1)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    # keep k whose first non-zero entry is positive
    nz = grid != 0
    first = np.argmax(nz, axis=1)
    keep = nz.any(axis=1) & (grid[np.arange(len(grid)), first] > 0)
    return grid[keep]


def diophantine_margin(alpha, tau, K):
    """Brute-force Diophantine margin of ``alpha`` up to sup-norm ``K``.

    Parameters
    ----------
    alpha : array_like or FrequencyVector
        Frequencies in turns.
    tau : float
        Exponent excess; the tested weight is ``||k||^{n + tau}``.
    K : int
        Largest tested sup-norm (``K >= 1``).

    Returns
    -------
    DiophantineWitness
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if isinstance(alpha, FrequencyVector):
        rational = alpha.rational
        a = alpha.as_array()
    else:
        fv = FrequencyVector.of(alpha)
        rational, a = fv.rational, fv.as_array()
    n = len(a)
    ks = _half_space_modes(n, int(K))
    if rational is not None:
        # exact distance for rational frequencies
        dots = [sum(Fraction(int(ki)) * ai for ki, ai in zip(k, rational)) for k in ks]
        dist = np.array([float(min(d - (d.numerator // d.denominator), 1 - (d - (d.numerator // d.denominator)))) for d in dots])
    else:
        dots = ks @ a
        dist = np.abs(dots - np.round(dots))
    norms = np.max(np.abs(ks), axis=1).astype(float)
    weighted = dist * norms ** (n + tau)
    i = int(np.argmin(weighted))
    return DiophantineWitness(tau=float(tau), K=int(K), margin=float(weighted[i]), argmin=tuple(int(v) for v in ks[i]))


def small_divisors(modes, alpha):
    """``|1 - exp(2 pi i <m, alpha>)|`` for each mode."""
    modes = np.atleast_2d(np.asarray(modes))
    phase = modes @ np.asarray(alpha, float)
    return np.abs(1.0 - np.exp(2j * np.pi * phase))


GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
