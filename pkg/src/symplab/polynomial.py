"""Sparse multivariate polynomials with real coefficients.

Used for potentials, twist polynomials and the local homoclinic data, where
closed-form gradients and Hessians are needed.
"""
from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement

import numpy as np


class Polynomial:
    """Polynomial in ``nvars`` variables stored as ``{exponent tuple: coefficient}``.

    Evaluation is vectorised over leading axes: ``p(x)`` accepts an array of
    shape ``(..., nvars)`` and returns shape ``(...)``.
    """

    def __init__(self, nvars, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars:
                raise ValueError(f"exponent {exp} does not have {self.nvars} entries")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            if c != 0:
                clean[exp] = clean.get(exp, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, i):
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def quadratic_form(cls, matrix):
        """Return ``0.5 * x^T A x`` for a symmetric matrix ``A``."""
        A = np.asarray(matrix)
        n = A.shape[0]
        terms = {}
        for i in range(n):
            for j in range(n):
                exp = [0] * n
                exp[i] += 1
                exp[j] += 1
                terms[tuple(exp)] = terms.get(tuple(exp), 0) + 0.5 * A[i, j]
        return cls(n, terms)

    # algebra ----------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check_compatible(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {e: c * other for e, c in self.terms.items()})
        self._check_compatible(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        if not self.terms:
            return f"Polynomial({self.nvars}, 0)"
        parts = [f"{c}*x^{e}" for e, c in sorted(self.terms.items())]
        return f"Polynomial({self.nvars}, {' + '.join(parts)})"

    def _check_compatible(self, other):
        if other.nvars != self.nvars:
            raise ValueError("polynomials have different numbers of variables")

    # structure ----------------------------------------------------------------
    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    @property
    def is_zero(self):
        return not self.terms

    def homogeneous_part(self, degree):
        return Polynomial(self.nvars, {e: c for e, c in self.terms.items() if sum(e) == degree})

    def truncate(self, max_degree):
        return Polynomial(self.nvars, {e: c for e, c in self.terms.items() if sum(e) <= max_degree})

    def coefficient(self, exp):
        return self.terms.get(tuple(exp), 0)

    def derivative(self, i):
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            ne = list(e)
            ne[i] -= 1
            terms[tuple(ne)] = terms.get(tuple(ne), 0) + c * e[i]
        return Polynomial(self.nvars, terms)

    @cached_property
    def gradient_polys(self):
        return tuple(self.derivative(i) for i in range(self.nvars))

    @cached_property
    def hessian_polys(self):
        g = self.gradient_polys
        return tuple(tuple(g[i].derivative(j) for j in range(self.nvars)) for i in range(self.nvars))

    @cached_property
    def _packed(self):
        if not self.terms:
            return np.zeros((0, self.nvars), dtype=int), np.zeros(0)
        exps = np.array(list(self.terms.keys()), dtype=int)
        coeffs = np.array([float(c) for c in self.terms.values()])
        return exps, coeffs

    # evaluation ---------------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.nvars:
            raise ValueError(f"expected trailing dimension {self.nvars}, got {x.shape}")
        exps, coeffs = self._packed
        if len(coeffs) == 0:
            return np.zeros(x.shape[:-1])
        # (..., T, n) powers multiplied over variables
        powers = x[..., None, :] ** exps
        return powers.prod(axis=-1) @ coeffs

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([g(x) for g in self.gradient_polys], axis=-1)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        rows = [np.stack([h(x) for h in row], axis=-1) for row in self.hessian_polys]
        return np.stack(rows, axis=-2)

    def evaluate_exact(self, x):
        """Evaluate with exact rational arithmetic (inputs converted by ``Fraction``)."""
        xs = [Fraction(v) for v in x]
        total = Fraction(0)
        for e, c in self.terms.items():
            term = Fraction(c)
            for xi, ei in zip(xs, e):
                term *= xi**ei
            total += term
        return total

    # serialization -------------------------------------------------------------
    def to_config(self):
        return {
            "nvars": self.nvars,
            "terms": [
                {"exp": list(e), "coeff": str(c) if isinstance(c, Fraction) else float(c)}
                for e, c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_config(cls, data):
        nvars = int(data["nvars"])
        terms = {}
        for t in data.get("terms", []):
            c = t["coeff"]
            terms[tuple(t["exp"])] = Fraction(c) if isinstance(c, str) else c
        return cls(nvars, terms)


def monomials(nvars, degree):
    """All exponent tuples of total degree exactly ``degree``, in graded lex order."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        exp = [0] * nvars
        for i in combo:
            exp[i] += 1
        out.append(tuple(exp))
    return sorted(set(out), reverse=True)


def monomials_upto(nvars, max_degree):
    out = []
    for d in range(max_degree + 1):
        out.extend(monomials(nvars, d))
    return out
