"""Fourier-polynomial functions of ``(theta, r)`` and truncated Fourier-Taylor jets.

``FourierPoly`` stores a real function
``f(theta, r) = Re sum_{m, e} c[m, e] exp(2 pi i m.theta) r^e`` with an explicit
(conjugate-symmetric) mode list. ``JetSpace`` / ``Jet`` hold the same kind of
object sampled on a uniform angle grid and truncated in total ``r``-degree;
they are the workhorse for composing maps near an invariant torus.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from ..polynomial import Polynomial, monomials, monomials_upto

TWO_PI = 2.0 * np.pi


def _mono_values(r, exps):
    """Monomials ``r^e`` for each row of ``exps``: shape ``(P, L)``."""
    r = np.atleast_2d(r)
    return np.prod(r[:, None, :] ** exps[None, :, :], axis=-1)


def _mono_grad(r, exps):
    """``d r^e / d r_i`` as shape ``(P, L, n)``."""
    r = np.atleast_2d(r)
    P, n = r.shape
    out = np.zeros((P, len(exps), n))
    for i in range(n):
        e = exps.copy()
        c = e[:, i].astype(float)
        e[:, i] = np.maximum(e[:, i] - 1, 0)
        out[:, :, i] = c[None, :] * _mono_values(r, e)
    return out


def _mono_hess(r, exps):
    r = np.atleast_2d(r)
    P, n = r.shape
    out = np.zeros((P, len(exps), n, n))
    for i in range(n):
        for j in range(n):
            e = exps.copy()
            c = e[:, i].astype(float)
            e[:, i] = np.maximum(e[:, i] - 1, 0)
            c = c * e[:, j]
            e[:, j] = np.maximum(e[:, j] - 1, 0)
            out[:, :, i, j] = c[None, :] * _mono_values(r, e)
    return out


class FourierPoly:
    """Real trigonometric-polynomial-in-``theta`` times polynomial-in-``r`` function.

    Parameters
    ----------
    n : int
        Degrees of freedom.
    modes : array_like of int, shape (K, n)
        Fourier modes; the set must be closed under ``m -> -m``.
    exps : array_like of int, shape (L, n)
        Monomial exponents in ``r``.
    coef : array_like of complex, shape (K, L)
        Coefficients with ``coef[-m] = conj(coef[m])``.
    """

    def __init__(self, n, modes, exps, coef):
        self.n = int(n)
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.n)
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.n)
        coef = np.asarray(coef, dtype=complex).reshape(len(modes), len(exps))
        # merge duplicate modes / exponents
        table = {}
        for a, m in enumerate(map(tuple, modes)):
            for b, e in enumerate(map(tuple, exps)):
                if coef[a, b] != 0:
                    table[(m, e)] = table.get((m, e), 0) + coef[a, b]
        self._set_table(table)

    def _set_table(self, table):
        table = {k: v for k, v in table.items() if v != 0}
        ms = sorted({m for m, _ in table})
        es = sorted({e for _, e in table}, key=lambda e: (sum(e), tuple(-x for x in e)))
        mi = {m: i for i, m in enumerate(ms)}
        ei = {e: i for i, e in enumerate(es)}
        coef = np.zeros((len(ms), len(es)), dtype=complex)
        for (m, e), v in table.items():
            coef[mi[m], ei[e]] = v
        self.modes = np.array(ms, dtype=np.int64).reshape(-1, self.n)
        self.exps = np.array(es, dtype=np.int64).reshape(-1, self.n)
        self.coef = coef

    @classmethod
    def from_table(cls, n, table):
        obj = cls.__new__(cls)
        obj.n = int(n)
        obj._set_table(dict(table))
        return obj

    @classmethod
    def zero(cls, n):
        return cls.from_table(n, {})

    @classmethod
    def cosine(cls, m, exp, amplitude):
        """``amplitude * cos(2 pi m.theta) * r^exp``."""
        m = tuple(int(v) for v in m)
        exp = tuple(int(v) for v in exp)
        n = len(m)
        if not any(m):
            return cls.from_table(n, {(m, exp): complex(amplitude)})
        neg = tuple(-v for v in m)
        return cls.from_table(n, {(m, exp): amplitude / 2, (neg, exp): amplitude / 2})

    @classmethod
    def sine(cls, m, exp, amplitude):
        """``amplitude * sin(2 pi m.theta) * r^exp``."""
        m = tuple(int(v) for v in m)
        exp = tuple(int(v) for v in exp)
        if not any(m):
            return cls.zero(len(m))
        neg = tuple(-v for v in m)
        return cls.from_table(len(m), {(m, exp): -0.5j * amplitude, (neg, exp): 0.5j * amplitude})

    def table(self):
        out = {}
        for a, m in enumerate(map(tuple, self.modes)):
            for b, e in enumerate(map(tuple, self.exps)):
                if self.coef[a, b] != 0:
                    out[(m, e)] = self.coef[a, b]
        return out

    # algebra ---------------------------------------------------------------
    def __add__(self, other):
        t = self.table()
        for k, v in other.table().items():
            t[k] = t.get(k, 0) + v
        return FourierPoly.from_table(self.n, t)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return FourierPoly.from_table(self.n, {k: v * scalar for k, v in self.table().items()})

    __rmul__ = __mul__

    def select(self, predicate):
        """Keep the terms ``(m, e)`` for which ``predicate(m, e)`` holds."""
        return FourierPoly.from_table(self.n, {k: v for k, v in self.table().items() if predicate(*k)})

    def degree_part(self, d):
        return self.select(lambda m, e: sum(e) == d)

    def oscillating(self):
        return self.select(lambda m, e: any(m))

    def mean(self):
        return self.select(lambda m, e: not any(m))

    def mean_polynomial(self):
        """The ``theta``-mean as a :class:`Polynomial` in ``r``."""
        return Polynomial(self.n, {e: float(np.real(v)) for (m, e), v in self.table().items() if not any(m)})

    def drop_small(self, tol):
        return FourierPoly.from_table(self.n, {k: v for k, v in self.table().items() if abs(v) > tol})

    def mass(self, degree=None, oscillating_only=True):
        """Largest coefficient modulus among the selected terms (0 if none)."""
        vals = [
            abs(v)
            for (m, e), v in self.table().items()
            if (degree is None or sum(e) == degree) and (any(m) or not oscillating_only)
        ]
        return max(vals, default=0.0)

    @property
    def is_zero(self):
        return self.coef.size == 0 or not np.any(self.coef)

    @property
    def max_mode(self):
        return int(np.max(np.abs(self.modes))) if len(self.modes) else 0

    @property
    def degrees(self):
        return sorted({int(sum(e)) for e in self.exps})

    def min_degree(self, oscillating_only=False):
        degs = [sum(e) for (m, e) in self.table() if any(m) or not oscillating_only]
        return min(degs, default=None)

    # evaluation ------------------------------------------------------------
    def _phases(self, theta):
        return np.exp(1j * TWO_PI * (np.atleast_2d(theta) @ self.modes.T))

    def __call__(self, theta, r):
        theta = np.atleast_2d(theta)
        r = np.atleast_2d(r)
        if self.is_zero:
            return np.zeros(max(len(theta), len(r)))
        A = self._phases(theta) @ self.coef
        return np.real(np.sum(A * _mono_values(r, self.exps), axis=-1))

    def derivatives(self, theta, r):
        """Value, gradients and Hessian blocks at a batch of points.

        Returns a dict with ``v`` (P,), ``t`` (P,n), ``r`` (P,n), ``tt``, ``tr``,
        ``rr`` (P,n,n). ``tr[:, i, j] = d^2 f / d theta_i d r_j``.
        """
        theta = np.atleast_2d(np.asarray(theta, float))
        r = np.atleast_2d(np.asarray(r, float))
        P = max(len(theta), len(r))
        n = self.n
        out = {
            "v": np.zeros(P),
            "t": np.zeros((P, n)),
            "r": np.zeros((P, n)),
            "tt": np.zeros((P, n, n)),
            "tr": np.zeros((P, n, n)),
            "rr": np.zeros((P, n, n)),
        }
        if self.is_zero:
            return out
        E = self._phases(theta)  # (P, K)
        M = _mono_values(r, self.exps)  # (P, L)
        G = _mono_grad(r, self.exps)  # (P, L, n)
        H = _mono_hess(r, self.exps)  # (P, L, n, n)
        ik = 1j * TWO_PI * self.modes.astype(float)  # (K, n)
        A = E @ self.coef  # (P, L)
        At = np.stack([(E * ik[None, :, i]) @ self.coef for i in range(n)], axis=-1)  # (P,L,n)
        Att = np.stack(
            [np.stack([(E * (ik[:, i] * ik[:, j])[None]) @ self.coef for j in range(n)], -1) for i in range(n)],
            axis=-2,
        )  # (P, L, n, n)
        out["v"] = np.real(np.sum(A * M, axis=-1))
        out["t"] = np.real(np.einsum("pli,pl->pi", At, M))
        out["r"] = np.real(np.einsum("pl,pli->pi", A, G))
        out["tt"] = np.real(np.einsum("plij,pl->pij", Att, M))
        out["tr"] = np.real(np.einsum("pli,plj->pij", At, G))
        out["rr"] = np.real(np.einsum("pl,plij->pij", A, H))
        return out

    # serialization -----------------------------------------------------------
    def to_config(self):
        terms = []
        for (m, e), v in sorted(self.table().items()):
            terms.append({"mode": list(m), "exp": list(e), "re": float(v.real), "im": float(v.imag)})
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_config(cls, d):
        n = int(d["n"])
        table = {}
        for t in d.get("terms", []):
            key = (tuple(int(v) for v in t["mode"]), tuple(int(v) for v in t["exp"]))
            table[key] = table.get(key, 0) + complex(t["re"], t.get("im", 0.0))
        return cls.from_table(n, table)

    def __repr__(self):
        return f"FourierPoly(n={self.n}, terms={len(self.table())}, degrees={self.degrees})"


class JetSpace:
    """Grid/degree parameters shared by a family of jets.

    Parameters
    ----------
    n : int
        Number of angles / actions.
    dmax : int
        Truncation degree in ``r``.
    grid : int
        Angle samples per dimension (should exceed twice the largest mode).
    """

    def __init__(self, n, dmax, grid):
        self.n = int(n)
        self.dmax = int(dmax)
        self.grid = int(grid)
        self.monos = monomials_upto(self.n, self.dmax)
        self.index = {e: i for i, e in enumerate(self.monos)}
        self.L = len(self.monos)
        self.shape = (self.L,) + (self.grid,) * self.n
        freqs = np.fft.fftfreq(self.grid, d=1.0 / self.grid)
        self.wavenumbers = np.stack(np.meshgrid(*([freqs] * self.n), indexing="ij"), axis=0)  # (n, N..)
        self.degrees = np.array([sum(e) for e in self.monos])
        pairs = []
        for a, ea in enumerate(self.monos):
            for b, eb in enumerate(self.monos):
                e = tuple(x + y for x, y in zip(ea, eb))
                if sum(e) <= self.dmax:
                    pairs.append((a, b, self.index[e]))
        self.pairs = np.array(pairs, dtype=np.int64)
        axes = [np.arange(self.grid) / self.grid] * self.n
        self.theta_grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)  # (N.., n)

    def zero(self):
        return Jet(self, np.zeros(self.shape))

    def constant(self, c):
        j = self.zero()
        j.data[0] = c
        return j

    def variable(self, i):
        """The jet of ``r_i``."""
        j = self.zero()
        e = [0] * self.n
        e[i] = 1
        j.data[self.index[tuple(e)]] = 1.0
        return j

    def from_polynomial(self, p):
        j = self.zero()
        for e, c in p.terms.items():
            if sum(e) <= self.dmax:
                j.data[self.index[e]] += float(c)
        return j

    def from_fourier(self, f):
        """Sample a :class:`FourierPoly` on the grid (terms above ``dmax`` dropped)."""
        j = self.zero()
        N = self.grid
        if f.max_mode >= N // 2:
            raise ValueError(f"mode {f.max_mode} not resolved by a grid of {N}")
        for (m, e), v in f.table().items():
            if sum(e) > self.dmax:
                continue
            spec = np.zeros((N,) * self.n, dtype=complex)
            spec[tuple(np.mod(m, N))] = v
            j.data[self.index[e]] += np.real(np.fft.ifftn(spec)) * N**self.n
        return j


class Jet:
    """Truncated Fourier-Taylor jet: ``data[l]`` holds the grid values of the ``r^e_l`` coefficient."""

    __slots__ = ("space", "data")

    def __init__(self, space, data):
        self.space = space
        self.data = data

    def copy(self):
        return Jet(self.space, self.data.copy())

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.space, self.data + other.data)
        out = self.copy()
        out.data[0] += other
        return out

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.data)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.data * other)
        sp = self.space
        out = np.zeros(sp.shape)
        a, b, c = sp.pairs.T
        np.add.at(out, c, self.data[a] * other.data[b])
        return Jet(sp, out)

    __rmul__ = __mul__

    def max_abs(self, degree=None):
        d = self.data if degree is None else self.data[self.space.degrees == degree]
        return float(np.max(np.abs(d))) if d.size else 0.0

    def low_degree(self):
        """Smallest degree with a non-negligible coefficient (``None`` if the jet vanishes)."""
        for d in range(self.space.dmax + 1):
            if self.max_abs(d) > 0:
                return d
        return None

    def truncate_below(self, d):
        out = self.copy()
        out.data[self.space.degrees < d] = 0.0
        return out

    def mean(self):
        axes = tuple(range(1, 1 + self.space.n))
        m = self.data.mean(axis=axes, keepdims=True)
        return Jet(self.space, np.broadcast_to(m, self.data.shape).copy())

    # calculus ------------------------------------------------------------
    def dr(self, i):
        sp = self.space
        out = np.zeros(sp.shape)
        for l, e in enumerate(sp.monos):
            if e[i] > 0:
                ne = list(e)
                ne[i] -= 1
                out[sp.index[tuple(ne)]] += e[i] * self.data[l]
        return Jet(sp, out)

    def _spectral(self, factor):
        axes = tuple(range(1, 1 + self.space.n))
        F = np.fft.fftn(self.data, axes=axes)
        return Jet(self.space, np.real(np.fft.ifftn(F * factor[None], axes=axes)))

    def dtheta(self, i):
        return self.dtheta_multi(tuple(1 if k == i else 0 for k in range(self.space.n)))

    def dtheta_multi(self, beta):
        sp = self.space
        if not any(beta):
            return self.copy()
        factor = np.ones((sp.grid,) * sp.n, dtype=complex)
        for i, b in enumerate(beta):
            factor = factor * (1j * TWO_PI * sp.wavenumbers[i]) ** b
        return self._spectral(factor)

    def shift(self, a):
        """``g(theta + a, r)`` for a constant vector ``a``."""
        sp = self.space
        a = np.atleast_1d(np.asarray(a, float))
        phase = np.exp(1j * TWO_PI * np.tensordot(a, sp.wavenumbers, axes=(0, 0)))
        return self._spectral(phase)

    def dr_multi(self, gamma):
        out = self
        for i, g in enumerate(gamma):
            for _ in range(g):
                out = out.dr(i)
        return out

    # conversion -------------------------------------------------------------
    def to_fourier(self, max_mode=None, drop=0.0):
        sp = self.space
        N = sp.grid
        axes = tuple(range(1, 1 + sp.n))
        F = np.fft.fftn(self.data, axes=axes) / N**sp.n
        table = {}
        limit = N // 2 - 1 if max_mode is None else min(max_mode, N // 2 - 1)
        ks = np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)
        for l, e in enumerate(sp.monos):
            block = F[l]
            for idx in zip(*np.nonzero(np.abs(block) > drop)):
                m = tuple(int(ks[i]) for i in idx)
                if max(abs(v) for v in m) > limit:
                    continue
                table[(m, e)] = block[idx]
        return FourierPoly.from_table(sp.n, table)


class _PowerCache:
    """Products ``A^beta`` of a vector of jets, cached by multi-index."""

    def __init__(self, comps):
        self.comps = comps
        self.cache = {}

    def __call__(self, beta):
        beta = tuple(beta)
        if beta in self.cache:
            return self.cache[beta]
        if not any(beta):
            val = self.comps[0].space.constant(1.0)
        else:
            i = next(k for k, b in enumerate(beta) if b > 0)
            lower = list(beta)
            lower[i] -= 1
            val = self(lower) * self.comps[i]
        self.cache[beta] = val
        return val


def _multi_factorial(beta):
    out = 1
    for b in beta:
        out *= factorial(b)
    return out


def compose(g, A=None, B=None):
    """``g(theta + A, r + B)`` for vectors of jets ``A``, ``B`` without constant terms.

    Exact up to the truncation degree when every component of ``A`` and ``B``
    vanishes at ``r = 0``.
    """
    sp = g.space
    n, dmax = sp.n, sp.dmax
    for comp in (A or []) + (B or []):
        if comp.max_abs(0) > 1e-12:
            raise ValueError("composition shifts must vanish at r = 0")
    powA = _PowerCache(A) if A else None
    powB = _PowerCache(B) if B else None
    out = sp.zero()
    betas = monomials_upto(n, dmax) if A else [(0,) * n]
    gammas = monomials_upto(n, dmax) if B else [(0,) * n]
    for beta in betas:
        gb = g.dtheta_multi(beta)
        if gb.low_degree() is None and any(beta):
            continue
        termA = powA(beta) if powA else None
        for gamma in gammas:
            if sum(beta) + sum(gamma) > dmax:
                continue
            h = gb.dr_multi(gamma)
            if h.low_degree() is None:
                continue
            term = h
            if termA is not None and any(beta):
                term = term * termA
            if powB is not None and any(gamma):
                term = term * powB(gamma)
            scale = 1.0 / (_multi_factorial(beta) * _multi_factorial(gamma))
            out = out + term * scale
    return out


__all__ = ["FourierPoly", "JetSpace", "Jet", "compose", "monomials"]
