"""Bi-characteristic flow dX/dt = (H_p, -H_x) and its Jacobian."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IntegrationDiverged
from .hamiltonian import HamiltonianModel

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if x.shape != p.shape or x.ndim != 1:
            raise DimensionMismatch("x and p must be vectors of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ValueError("phase point must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def n(self):
        return self.x.size

    def as_array(self):
        return np.concatenate([self.x, self.p])


@dataclass(frozen=True)
class Trajectory:
    """Samples of X(t, X0) on a uniform time grid.

    ``X`` has shape (m+1, 2n); ``jacobian`` (optional) has shape
    (m+1, 2n, 2n) and holds dX(t)/dX0.
    """

    t: np.ndarray
    X: np.ndarray
    jacobian: np.ndarray | None = None

    @property
    def n(self):
        return self.X.shape[-1] // 2

    @property
    def x(self):
        return self.X[:, : self.n]

    @property
    def p(self):
        return self.X[:, self.n:]

    def point(self, i=-1) -> PhasePoint:
        return PhasePoint(self.x[i], self.p[i])


def time_grid(T, dt):
    """Uniform grid from 0 to T with the fewest steps of size <= dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    m = int(math.ceil(abs(T) / dt - 1e-9))
    if m == 0:
        return np.zeros(1), 0.0
    h = T / m
    return h * np.arange(m + 1), h


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_model(model, X0):
    if X0.shape[-1] != 2 * model.n:
        raise DimensionMismatch(
            f"initial point has {X0.shape[-1]} components, expected {2 * model.n}")


def integrate_rays(model: HamiltonianModel, X0, T, dt=DEFAULT_DT, with_jacobian=False,
                   keep="all"):
    """Vectorised RK4 for a batch of rays ``X0`` of shape (..., 2n).

    ``T`` may be negative (backward tracing).  ``keep="all"`` returns every
    sample, ``keep="last"`` only the endpoint.  Returns ``(t, X, J)``.
    """
    X0 = np.asarray(X0, dtype=float)
    _check_model(model, X0)
    n = model.n
    t, h = time_grid(T, dt)

    def f(_, X):
        return model.velocity(X)

    X = X0.copy()
    J = np.broadcast_to(np.eye(2 * n), X0.shape[:-1] + (2 * n, 2 * n)).copy()
    Xs, Js = [X.copy()], [J.copy()]
    for i in range(1, t.size):
        if with_jacobian:
            X, J = _rk4_pair(model, X, J, h)
        else:
            X = rk4_step(f, t[i - 1], X, h)
        if not np.all(np.isfinite(X)) or (with_jacobian and not np.all(np.isfinite(J))):
            raise IntegrationDiverged("ray integration produced non-finite state", t[i - 1])
        if keep == "all":
            Xs.append(X.copy())
            if with_jacobian:
                Js.append(J.copy())
    if keep == "all":
        Xout = np.stack(Xs)
        Jout = np.stack(Js) if with_jacobian else None
    else:
        Xout, Jout = X, (J if with_jacobian else None)
    return t, Xout, Jout


def _rk4_pair(model, X, J, h):
    n = model.n

    def rhs(X, J):
        DV = np.zeros(X.shape[:-1] + (2 * n, 2 * n))
        DV[..., :n, n:] = np.eye(n)
        DV[..., n:, :n] = -model.hess_V(X[..., :n])
        return model.velocity(X), DV @ J

    k1x, k1j = rhs(X, J)
    k2x, k2j = rhs(X + 0.5 * h * k1x, J + 0.5 * h * k1j)
    k3x, k3j = rhs(X + 0.5 * h * k2x, J + 0.5 * h * k2j)
    k4x, k4j = rhs(X + h * k3x, J + h * k3j)
    return (X + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x),
            J + (h / 6) * (k1j + 2 * k2j + 2 * k3j + k4j))


def flow_map(model: HamiltonianModel, X0: PhasePoint, T, dt=DEFAULT_DT,
             with_jacobian=False) -> Trajectory:
    """Classical RK4 integration of the Hamiltonian ODEs from ``X0``.

    When ``T`` is not a multiple of ``dt`` the step is shrunk to ``T/m`` with
    ``m = ceil(T/dt)``.
    """
    X0 = X0.as_array() if isinstance(X0, PhasePoint) else np.asarray(X0, dtype=float)
    t, X, J = integrate_rays(model, X0, T, dt, with_jacobian=with_jacobian)
    return Trajectory(t=t, X=X, jacobian=J)


def flow_jacobian(model: HamiltonianModel, X0, T, dt=DEFAULT_DT) -> np.ndarray:
    """dX(t)/dX0 at every sample, from the variational equations."""
    return flow_map(model, X0, T, dt, with_jacobian=True).jacobian
