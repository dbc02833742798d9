"""Schrödinger Hamiltonian H(x, p) = |p|^2/2 + V(x) with polynomial V."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DerivativeOrderError, DimensionMismatch
from .multiindex import multi_indices, multi_indices_upto, unit
from .polynomial import Polynomial


@dataclass(frozen=True)
class HamiltonianModel:
    """Phase-space Hamiltonian with a polynomial external potential.

    Every derivative of the potential up to ``max_derivative_order`` is
    precomputed exactly at construction; the model is read-only afterwards.
    """

    n: int
    potential: Polynomial
    max_derivative_order: int = 8
    _derivs: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DimensionMismatch("only n = 1 or n = 2 is supported")
        if self.potential.n != self.n:
            raise DimensionMismatch(
                f"potential has {self.potential.n} variables, model has n={self.n}")
        derivs = {}
        for alpha in multi_indices_upto(self.n, self.max_derivative_order):
            derivs[alpha] = self.potential.derivative(alpha)
        object.__setattr__(self, "_derivs", derivs)

    @classmethod
    def from_config(cls, cfg):
        n = int(cfg["n"])
        pot = Polynomial.from_config(n, cfg.get("potential", []))
        return cls(n, pot, int(cfg.get("max_derivative_order", 8)))

    def to_config(self):
        return {"n": self.n, "potential": self.potential.to_config(),
                "max_derivative_order": self.max_derivative_order}

    # -- potential --------------------------------------------------------
    def potential_derivative(self, alpha) -> Polynomial:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise DimensionMismatch(f"multi-index {alpha} does not match n={self.n}")
        if sum(alpha) > self.max_derivative_order:
            raise DerivativeOrderError(
                f"|alpha|={sum(alpha)} exceeds max_derivative_order={self.max_derivative_order}")
        return self._derivs[alpha]

    def V(self, x):
        return self.potential(self._points(x))

    def dV(self, x, alpha):
        """Value of d^alpha V at positions ``x`` (shape (..., n))."""
        return self.potential_derivative(alpha)(self._points(x))

    def grad_V(self, x):
        x = self._points(x)
        return np.stack([self.dV(x, unit(self.n, j)) for j in range(self.n)], axis=-1)

    def hess_V(self, x):
        x = self._points(x)
        out = np.empty(x.shape[:-1] + (self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                a = tuple(unit(self.n, i)[m] + unit(self.n, j)[m] for m in range(self.n))
                out[..., i, j] = out[..., j, i] = self.dV(x, a)
        return out

    def derivative_tensor(self, x, r):
        """All order-``r`` derivatives at ``x`` in sorted storage."""
        x = self._points(x)
        return {a: self.dV(x, a) for a in multi_indices(self.n, r)}

    # -- Hamiltonian pieces -----------------------------------------------
    def split(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != 2 * self.n:
            raise DimensionMismatch(
                f"phase point has {X.shape[-1]} components, expected {2 * self.n}")
        return X[..., : self.n], X[..., self.n:]

    def H(self, X):
        x, p = self.split(X)
        return 0.5 * np.sum(p * p, axis=-1) + self.V(x)

    def H_p(self, X):
        return self.split(X)[1].copy()

    def H_x(self, X):
        return self.grad_V(self.split(X)[0])

    def H_xx(self, X):
        return self.hess_V(self.split(X)[0])

    def H_pp(self, X):
        shape = np.asarray(X).shape[:-1]
        return np.broadcast_to(np.eye(self.n), shape + (self.n, self.n)).copy()

    def H_xp(self, X):
        shape = np.asarray(X).shape[:-1]
        return np.zeros(shape + (self.n, self.n))

    H_px = H_xp

    def velocity(self, X):
        """Hamiltonian vector field (H_p, -H_x)."""
        x, p = self.split(X)
        return np.concatenate([p, -self.grad_V(x)], axis=-1)

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"position has {x.shape[-1]} components, expected {self.n}")
        return x


def evaluate(model: HamiltonianModel, X) -> np.ndarray:
    """H(x, p) at phase point(s) ``X`` = (x, p)."""
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("phase point must be finite")
    return model.H(X)


def potential_derivative(model: HamiltonianModel, alpha) -> Polynomial:
    return model.potential_derivative(alpha)
