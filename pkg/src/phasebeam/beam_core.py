"""Per-beam ODEs: action, level-set Hessian, amplitude and Taylor jets.

All beams of a superposition are advanced together by one vectorised RK4
scheme.  The state of every beam is packed into a complex row vector so the
stages are plain array arithmetic.

Level-set convention: g = phi_1 + i phi_2 with phi_1(0) = x and
phi_2(0) = (p - grad S_in(x)) / beta, hence

    g_x(0) = I - i Hess S_in(x0) / beta,   g_p(0) = (i / beta) I,

and M = -g_x g_p^{-1} starts at Hess S_in(x0) + i beta I.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beam_higher import (MAX_K, amplitude_indices, derive_amplitude_system,
                          derive_phase_jet_system)
from .errors import (ConsistencyViolation, DimensionMismatch, IntegrationDiverged,
                     SingularLevelSet, UnsupportedOrder)
from .flow import DEFAULT_DT, Trajectory, time_grid
from .multiindex import multi_indices, unit

COND_LIMIT = 1e12
ASYM_LIMIT = 1e-6


def hessian_from_levelset(g_x, g_p, check=True):
    """M = -g_x g_p^{-1}, symmetrised.

    Works on stacks (..., n, n).  Raises SingularLevelSet when g_p has
    condition number above 1e12 and ConsistencyViolation when the product
    is asymmetric beyond 1e-6 before averaging.
    """
    g_x = np.asarray(g_x, dtype=complex)
    g_p = np.asarray(g_p, dtype=complex)
    if g_x.shape != g_p.shape or g_x.shape[-1] != g_x.shape[-2]:
        raise DimensionMismatch("g_x and g_p must be square matrices of equal shape")
    if check:
        cond = np.linalg.cond(g_p)
        if not np.all(np.isfinite(cond)) or np.any(cond > COND_LIMIT):
            raise SingularLevelSet("g_p is numerically singular")
    # M^T = -g_p^{-T} g_x^T
    M = -np.swapaxes(np.linalg.solve(np.swapaxes(g_p, -1, -2), np.swapaxes(g_x, -1, -2)),
                     -1, -2)
    MT = np.swapaxes(M, -1, -2)
    if check:
        asym = np.max(np.abs(M - MT), initial=0.0)
        scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
        if asym > ASYM_LIMIT * scale:
            raise ConsistencyViolation(f"level-set Hessian asymmetric by {asym:.3e}")
    return 0.5 * (M + MT)


def b_matrix(g_x, g_p):
    """B = conj(g_p)^T g_x - conj(g_x)^T g_p (constant along the flow)."""
    g_x = np.asarray(g_x, dtype=complex)
    g_p = np.asarray(g_p, dtype=complex)
    return np.swapaxes(g_p.conj(), -1, -2) @ g_x - np.swapaxes(g_x.conj(), -1, -2) @ g_p


@dataclass(frozen=True)
class InitialBeamData:
    """Launch data for a batch of beams (leading axis = beam index).

    ``hess0`` is the real Hessian of the initial phase, so M_in = hess0 +
    i beta I.  ``jets0`` maps |alpha| >= 3 to the initial phase derivatives
    and ``amp0`` maps (l, alpha) to the initial amplitude derivatives.
    """

    x0: np.ndarray
    p0: np.ndarray
    S0: np.ndarray
    hess0: np.ndarray
    beta: float
    k: int = 1
    jets0: dict = field(default_factory=dict)
    amp0: dict = field(default_factory=dict)

    def __post_init__(self):
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        nb, n = x0.shape
        p0 = np.asarray(self.p0, dtype=float).reshape(nb, n)
        S0 = np.asarray(self.S0, dtype=float).reshape(nb)
        hess0 = np.asarray(self.hess0, dtype=float).reshape(nb, n, n)
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.k < 1 or self.k > MAX_K:
            raise UnsupportedOrder(f"beam order k={self.k} not supported (1..{MAX_K})")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "S0", S0)
        object.__setattr__(self, "hess0", hess0)
        jets = {}
        for r in range(3, self.k + 2):
            for a in multi_indices(n, r):
                jets[a] = np.broadcast_to(np.asarray(self.jets0.get(a, 0.0), dtype=complex),
                                          (nb,)).copy()
        amps = {}
        for key in amplitude_indices(n, self.k):
            default = 1.0 if key == (0, (0,) * n) else 0.0
            amps[key] = np.broadcast_to(
                np.asarray(self.amp0.get(key, default), dtype=complex), (nb,)).copy()
        object.__setattr__(self, "jets0", jets)
        object.__setattr__(self, "amp0", amps)

    @property
    def n(self):
        return self.x0.shape[1]

    @property
    def nbeams(self):
        return self.x0.shape[0]

    def levelset_initial(self):
        n, nb = self.n, self.nbeams
        eye = np.broadcast_to(np.eye(n), (nb, n, n))
        gx = eye - 1j * self.hess0 / self.beta
        gp = (1j / self.beta) * eye.astype(complex)
        return gx, gp

    def subset(self, idx):
        idx = np.asarray(idx)
        return InitialBeamData(self.x0[idx], self.p0[idx], self.S0[idx], self.hess0[idx],
                               self.beta, self.k,
                               {a: v[idx] for a, v in self.jets0.items()},
                               {a: v[idx] for a, v in self.amp0.items()})


class _Layout:
    """Column layout of the packed per-beam state vector."""

    def __init__(self, n, k):
        self.n, self.k = n, k
        self.jet_indices = [a for r in range(3, k + 2) for a in multi_indices(n, r)]
        self.amp_indices = amplitude_indices(n, k)
        c = 0
        self.x = slice(c, c + n); c += n
        self.p = slice(c, c + n); c += n
        self.gx = slice(c, c + n * n); c += n * n
        self.gp = slice(c, c + n * n); c += n * n
        self.S = c; c += 1
        self.jet = {a: c + i for i, a in enumerate(self.jet_indices)}
        c += len(self.jet_indices)
        self.amp = {a: c + i for i, a in enumerate(self.amp_indices)}
        c += len(self.amp_indices)
        self.size = c


def _second_order_indices(n):
    return list(multi_indices(n, 2))


def _m_index(alpha):
    idx = [i for i, a in enumerate(alpha) for _ in range(a)]
    return idx[0], idx[1]


class BeamDynamics:
    """Right-hand side of the packed beam system for a model and order k."""

    def __init__(self, model, k):
        if k < 1 or k > MAX_K:
            raise UnsupportedOrder(f"beam order k={k} not supported (1..{MAX_K})")
        self.model, self.k, self.n = model, k, model.n
        self.layout = _Layout(model.n, k)
        self.jets = derive_phase_jet_system(model.n, k) if k >= 2 else None
        self.amps = derive_amplitude_system(model.n, k)

    def unpack(self, Y):
        L, n = self.layout, self.n
        nb = Y.shape[0]
        x = Y[:, L.x].real
        p = Y[:, L.p].real
        gx = Y[:, L.gx].reshape(nb, n, n)
        gp = Y[:, L.gp].reshape(nb, n, n)
        return x, p, gx, gp

    def hessian(self, gx, gp):
        if self.n == 1:
            return -gx / gp
        M = -np.swapaxes(np.linalg.solve(np.swapaxes(gp, -1, -2), np.swapaxes(gx, -1, -2)),
                         -1, -2)
        return 0.5 * (M + np.swapaxes(M, -1, -2))

    def phase_table(self, Y, M=None):
        """phi_alpha for 0 <= |alpha| <= k+1 from a packed state."""
        L, n = self.layout, self.n
        x, p, gx, gp = self.unpack(Y)
        if M is None:
            M = self.hessian(gx, gp)
        phi = {(0,) * n: Y[:, L.S].real}
        for j in range(n):
            phi[unit(n, j)] = p[:, j]
        for a in _second_order_indices(n):
            i, j = _m_index(a)
            phi[a] = M[:, i, j]
        for a in L.jet_indices:
            phi[a] = Y[:, L.jet[a]]
        return phi

    def amp_table(self, Y):
        return {key: Y[:, c] for key, c in self.layout.amp.items()}

    def rhs(self, Y):
        L, n, model = self.layout, self.n, self.model
        x, p, gx, gp = self.unpack(Y)
        M = self.hessian(gx, gp)
        hessV = model.hess_V(x)
        out = np.empty_like(Y)
        out[:, L.x] = p
        out[:, L.p] = -model.grad_V(x)
        # L g_x = H_xx g_p - H_xp g_x,  L g_p = H_px g_p - H_pp g_x (H_xp = 0, H_pp = I)
        out[:, L.gx] = (hessV @ gp).reshape(-1, n * n)
        out[:, L.gp] = (-gx).reshape(-1, n * n)
        out[:, L.S] = 0.5 * np.sum(p * p, axis=1) - model.V(x)
        phi = self.phase_table(Y, M)
        if self.jets is not None:
            dV = {a: model.dV(x, a) for a in L.jet_indices}
            djet = self.jets.rhs(phi, dV)
            for a in L.jet_indices:
                out[:, L.jet[a]] = djet[a]
        damp = self.amps.rhs(phi, self.amp_table(Y))
        for key, c in L.amp.items():
            out[:, c] = damp[key]
        return out

    def phase_rates(self, Y):
        """d/dt phi_alpha along the ray for 0 <= |alpha| <= k+1."""
        L, n, model = self.layout, self.n, self.model
        x, p, gx, gp = self.unpack(Y)
        M = self.hessian(gx, gp)
        rates = {(0,) * n: 0.5 * np.sum(p * p, axis=1) - model.V(x)}
        gV = model.grad_V(x)
        for j in range(n):
            rates[unit(n, j)] = -gV[:, j]
        # Riccati: dM/dt = -V'' - M M
        dM = -model.hess_V(x) - M @ M
        for a in _second_order_indices(n):
            i, j = _m_index(a)
            rates[a] = dM[:, i, j]
        if self.jets is not None:
            phi = self.phase_table(Y, M)
            dV = {a: model.dV(x, a) for a in L.jet_indices}
            rates.update(self.jets.rhs(phi, dV))
        return rates

    def amp_rates(self, Y):
        return self.amps.rhs(self.phase_table(Y), self.amp_table(Y))

    def pack(self, init: InitialBeamData):
        L, n = self.layout, self.n
        if init.n != n:
            raise DimensionMismatch(f"beam data has n={init.n}, model has n={n}")
        if init.k != self.k:
            raise UnsupportedOrder(f"initial data prepared for k={init.k}, not k={self.k}")
        Y = np.zeros((init.nbeams, L.size), dtype=complex)
        Y[:, L.x] = init.x0
        Y[:, L.p] = init.p0
        gx, gp = init.levelset_initial()
        Y[:, L.gx] = gx.reshape(-1, n * n)
        Y[:, L.gp] = gp.reshape(-1, n * n)
        Y[:, L.S] = init.S0
        for a, c in L.jet.items():
            Y[:, c] = init.jets0[a]
        for a, c in L.amp.items():
            Y[:, c] = init.amp0[a]
        return Y


def _save_indices(t, h, save_times):
    if save_times is None:
        return np.arange(t.size)
    ts = np.atleast_1d(np.asarray(save_times, dtype=float))
    if h == 0.0:
        if np.any(ts != 0.0):
            raise ValueError("save times outside a zero-length run")
        return np.zeros(ts.size, dtype=int)
    q = ts / h
    idx = np.rint(q).astype(int)
    if np.any(np.abs(q - idx) > 1e-6) or np.any(idx < 0) or np.any(idx >= t.size):
        raise ValueError(f"save times {ts} are not on the integration grid (step {h:g})")
    return idx


@dataclass(frozen=True)
class BeamBundle:
    """Samples of a batch of beams at the saved times.

    ``Y`` has shape (ntimes, nbeams, state size); accessors return arrays
    with the time axis first and the beam axis second.
    """

    dynamics: BeamDynamics
    times: np.ndarray
    Y: np.ndarray
    init: InitialBeamData

    @property
    def n(self):
        return self.dynamics.n

    @property
    def k(self):
        return self.dynamics.k

    @property
    def beta(self):
        return self.init.beta

    @property
    def nbeams(self):
        return self.Y.shape[1]

    @property
    def jet_indices(self):
        return list(self.dynamics.layout.jet_indices)

    @property
    def amp_indices(self):
        return list(self.dynamics.layout.amp_indices)

    def time_index(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not among the saved samples")
        return i

    @property
    def x(self):
        return self.Y[..., self.dynamics.layout.x].real

    @property
    def p(self):
        return self.Y[..., self.dynamics.layout.p].real

    @property
    def S(self):
        return self.Y[..., self.dynamics.layout.S].real

    @property
    def g_x(self):
        n = self.n
        return self.Y[..., self.dynamics.layout.gx].reshape(self.Y.shape[:2] + (n, n))

    @property
    def g_p(self):
        n = self.n
        return self.Y[..., self.dynamics.layout.gp].reshape(self.Y.shape[:2] + (n, n))

    @property
    def M(self):
        return hessian_from_levelset(self.g_x, self.g_p)

    @property
    def A(self):
        return self.amp((0, (0,) * self.n))

    def jet(self, alpha):
        return self.Y[..., self.dynamics.layout.jet[tuple(alpha)]]

    def amp(self, key):
        return self.Y[..., self.dynamics.layout.amp[key]]

    def phase_table(self, i):
        return self.dynamics.phase_table(self.Y[i])

    def amp_table(self, i):
        return self.dynamics.amp_table(self.Y[i])

    def phase_rates(self, i):
        return self.dynamics.phase_rates(self.Y[i])

    def amp_rates(self, i):
        return self.dynamics.amp_rates(self.Y[i])

    def subset(self, idx):
        idx = np.asarray(idx)
        return BeamBundle(self.dynamics, self.times, self.Y[:, idx], self.init.subset(idx))

    def record(self, b) -> "BeamRecord":
        n = self.n
        X = np.concatenate([self.x[:, b], self.p[:, b]], axis=-1)
        return BeamRecord(
            t=self.times, x0=self.init.x0[b], trajectory=Trajectory(self.times, X),
            S=self.S[:, b], g_x=self.g_x[:, b], g_p=self.g_p[:, b],
            M=hessian_from_levelset(self.g_x[:, b], self.g_p[:, b]),
            A=self.A[:, b],
            jets={a: self.jet(a)[:, b] for a in self.jet_indices},
            amps={key: self.amp(key)[:, b] for key in self.amp_indices},
            beta=self.beta, k=self.k, n=n)


@dataclass(frozen=True)
class BeamRecord:
    """One beam sampled along its ray (time axis first in every array)."""

    t: np.ndarray
    x0: np.ndarray
    trajectory: Trajectory
    S: np.ndarray
    g_x: np.ndarray
    g_p: np.ndarray
    M: np.ndarray
    A: np.ndarray
    jets: dict
    amps: dict
    beta: float
    k: int
    n: int

    @property
    def x(self):
        return self.trajectory.x

    @property
    def p(self):
        return self.trajectory.p

    @property
    def B(self):
        return b_matrix(self.g_x, self.g_p)


def integrate_beams(model, init: InitialBeamData, k, T, dt=DEFAULT_DT, save_times=None,
                    check=True) -> BeamBundle:
    """Advance every beam of ``init`` to time ``T`` and keep ``save_times``.

    ``save_times`` must lie on the uniform step grid (all steps when None).
    With ``check`` the level-set matrices are audited at every saved sample.
    """
    dyn = BeamDynamics(model, k)
    Y = dyn.pack(init)
    t, h = time_grid(T, dt)
    keep = _save_indices(t, h, save_times)
    wanted = {}
    for j, i in enumerate(keep):
        wanted.setdefault(int(i), []).append(j)
    saved = [None] * keep.size
    for step in range(t.size):
        if step in wanted:
            for j in wanted[step]:
                saved[j] = Y.copy()
        if step >= keep.max():
            break
        k1 = dyn.rhs(Y)
        k2 = dyn.rhs(Y + 0.5 * h * k1)
        k3 = dyn.rhs(Y + 0.5 * h * k2)
        k4 = dyn.rhs(Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(Y)):
            raise IntegrationDiverged("beam integration produced non-finite state", t[step])
    times = t[keep]
    bundle = BeamBundle(dyn, times, np.stack(saved), init)
    if check:
        hessian_from_levelset(bundle.g_x, bundle.g_p)
    return bundle


def first_order_data(S_in, x0, beta, A0=1.0, k=1):
    """InitialBeamData launched from x0 on the Lagrangian manifold of S_in."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    n = S_in.n
    if x0.shape[1] != n:
        x0 = x0.reshape(-1, n)
    p0 = np.stack([S_in.derivative(unit(n, j))(x0) for j in range(n)], axis=-1)
    hess = np.empty((x0.shape[0], n, n))
    for i in range(n):
        for j in range(n):
            a = tuple(unit(n, i)[m] + unit(n, j)[m] for m in range(n))
            hess[:, i, j] = S_in.derivative(a)(x0)
    jets = {a: S_in.derivative(a)(x0) for r in range(3, k + 2) for a in multi_indices(n, r)}
    return InitialBeamData(x0, p0, S_in(x0), hess, beta, k, jets,
                           {(0, (0,) * n): A0})


def integrate_beam_first_order(model, x0, S_in, beta, T, dt=DEFAULT_DT, A0=1.0) -> BeamRecord:
    """Single first-order beam launched at (x0, grad S_in(x0)).

    The amplitude starts at ``A0`` (the value A_in(x0)).
    """
    init = first_order_data(S_in, x0, beta, A0=A0, k=1)
    if init.nbeams != 1:
        raise DimensionMismatch("integrate_beam_first_order launches a single beam")
    return integrate_beams(model, init, 1, T, dt).record(0)


def riccati_reference(model, ray: Trajectory, M_in, dt=None):
    """Direct RK4 integration of dM/dt = -V''(x) - M^2 along ``ray``.

    The ray is re-integrated jointly with M from its first sample with the
    ray's own step, so no stage values have to be interpolated.  Returns an
    array (ntimes, n, n) on ``ray.t``.
    """
    n = model.n
    t = np.asarray(ray.t, dtype=float)
    M = np.array(M_in, dtype=complex).reshape(n, n)
    if np.linalg.eigvalsh(M.imag).min() <= 0:
        raise ValueError("Im(M_in) must be positive definite")
    if t.size == 1:
        return M[None].copy()
    h = t[1] - t[0] if dt is None else dt
    nsub = max(1, int(round((t[1] - t[0]) / h)))
    h = (t[1] - t[0]) / nsub
    x = np.array(ray.X[0, :n], dtype=float)
    p = np.array(ray.X[0, n:], dtype=float)

    def f(x, p, M):
        return p, -model.grad_V(x[None])[0], -model.hess_V(x[None])[0] - M @ M

    out = [M.copy()]
    for _ in range(t.size - 1):
        for _ in range(nsub):
            a = f(x, p, M)
            b = f(x + 0.5 * h * a[0], p + 0.5 * h * a[1], M + 0.5 * h * a[2])
            c = f(x + 0.5 * h * b[0], p + 0.5 * h * b[1], M + 0.5 * h * b[2])
            d = f(x + h * c[0], p + h * c[1], M + h * c[2])
            x = x + h / 6 * (a[0] + 2 * b[0] + 2 * c[0] + d[0])
            p = p + h / 6 * (a[1] + 2 * b[1] + 2 * c[1] + d[1])
            M = M + h / 6 * (a[2] + 2 * b[2] + 2 * c[2] + d[2])
        if not np.all(np.isfinite(M)):
            raise IntegrationDiverged("Riccati integration overflowed", t[len(out) - 1])
        out.append(M.copy())
    return np.stack(out)
