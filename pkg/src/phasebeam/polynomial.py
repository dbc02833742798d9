"""Sparse multivariate polynomials with exact differentiation.

A polynomial in ``n`` variables is a mapping from exponent tuples to real
coefficients, e.g. ``x0**2 * x1 + 3`` is ``{(2, 1): 1.0, (0, 0): 3.0}``.
"""
from __future__ import annotations

from math import factorial, prod
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch


class Polynomial:
    """Immutable sparse polynomial in ``n`` real variables."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[tuple, float] | None = None):
        if n < 1:
            raise ValueError("polynomial needs at least one variable")
        self.n = int(n)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n:
                raise DimensionMismatch(f"exponent {exps} has wrong length for n={n}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = float(c)
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
        self._terms = {e: c for e, c in sorted(clean.items()) if c != 0.0}

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def from_config(cls, n, items: Iterable[Mapping]):
        """Build from ``[{"exponents": [4], "coeff": 0.25}, ...]``."""
        terms = {}
        for item in items:
            e = tuple(item["exponents"])
            terms[e] = terms.get(e, 0.0) + float(item["coeff"])
        return cls(n, terms)

    @classmethod
    def univariate(cls, coeffs):
        """``coeffs[j]`` multiplies ``x**j``."""
        return cls(1, {(j,): c for j, c in enumerate(coeffs)})

    def to_config(self):
        return [{"exponents": list(e), "coeff": c} for e, c in self._terms.items()]

    # -- inspection -------------------------------------------------------
    @property
    def terms(self):
        return dict(self._terms)

    @property
    def degree(self):
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def is_zero(self):
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"Polynomial(n={self.n}, 0)"
        parts = []
        for e, c in self._terms.items():
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"Polynomial(n={self.n}, " + " + ".join(parts) + ")"

    # -- algebra ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatch("cannot add polynomials of different dimension")
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(self.n, terms)

    def __mul__(self, scalar):
        if isinstance(scalar, Polynomial):
            if scalar.n != self.n:
                raise DimensionMismatch("cannot multiply polynomials of different dimension")
            terms = {}
            for e1, c1 in self._terms.items():
                for e2, c2 in scalar._terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    terms[e] = terms.get(e, 0.0) + c1 * c2
            return Polynomial(self.n, terms)
        return Polynomial(self.n, {e: c * float(scalar) for e, c in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def derivative(self, alpha) -> "Polynomial":
        """Exact partial derivative d^alpha (alpha given as exponent tuple)."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise DimensionMismatch(f"multi-index {alpha} does not match n={self.n}")
        terms = {}
        for e, c in self._terms.items():
            if any(k < a for k, a in zip(e, alpha)):
                continue
            fall = prod(factorial(k) // factorial(k - a) for k, a in zip(e, alpha))
            terms[tuple(k - a for k, a in zip(e, alpha))] = c * fall
        return Polynomial(self.n, terms)

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., n)`` (or scalar when n=1)."""
        x = np.asarray(x)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"points have trailing dimension {x.shape[-1]}, expected {self.n}")
        out = np.zeros(x.shape[:-1], dtype=np.result_type(x.dtype, float))
        if not self._terms:
            return out
        maxdeg = max(max(e) for e in self._terms)
        # powers[k][..., i] = x_i**k
        powers = [np.ones_like(x, dtype=out.dtype)]
        for _ in range(maxdeg):
            powers.append(powers[-1] * x)
        for e, c in self._terms.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    term = term * powers[k][..., i]
            out = out + term
        return out
