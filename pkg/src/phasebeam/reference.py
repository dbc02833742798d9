"""Reference solutions of i eps psi_t = -eps^2/2 Lap psi + V psi.

* split-step Fourier solver on a periodic box (Strang, optionally composed
  to fourth order),
* the free-particle focusing family psi_in = g(x) exp(-i x^2 / (2 eps)),
* exact propagation of complex Gaussian packets under quadratic potentials,
* trapezoidal L2 norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from .errors import DimensionMismatch, DomainTooSmall, UnsupportedOrder
from .hamiltonian import HamiltonianModel
from .wavefield import UniformGrid, WaveField

MONITOR_TOL = 1e-10


@dataclass(frozen=True)
class SpectralRun:
    """Periodic box [-L, L)^n with N nodes per axis (power of two)."""

    model: HamiltonianModel
    L: float
    N: int
    eps: float
    dt: float | None = None
    order: int = 2

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError("node count must be a power of two")
        if self.L <= 0 or self.eps <= 0:
            raise ValueError("L and eps must be positive")
        if self.order not in (2, 4):
            raise ValueError("splitting order must be 2 or 4")
        if self.dt is None:
            object.__setattr__(self, "dt", self.eps / 20.0)
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def n(self):
        return self.model.n

    @property
    def dx(self):
        return 2.0 * self.L / self.N

    @property
    def grid(self) -> UniformGrid:
        return UniformGrid((-self.L,) * self.n, (self.L - self.dx,) * self.n, (self.N,) * self.n)

    def wavenumbers(self):
        xi = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.dx)
        mesh = np.meshgrid(*([xi] * self.n), indexing="ij")
        return sum(m * m for m in mesh)


def make_run(model, eps, L, dx_max=None, dt=None, order=2) -> SpectralRun:
    """Smallest power-of-two grid on [-L, L) with spacing <= dx_max (eps/4)."""
    dx_max = eps / 4.0 if dx_max is None else dx_max
    N = 1 << int(math.ceil(math.log2(2.0 * L / dx_max)))
    return SpectralRun(model, L, max(N, 2), eps, dt, order)


def domain_half_width(excursion, eps):
    """L = max ray excursion + 8 sqrt(eps) ln(1/eps)."""
    return excursion + 8.0 * math.sqrt(eps) * math.log(1.0 / eps)


def _yoshida_weights():
    c = 2.0 ** (1.0 / 3.0)
    w1 = 1.0 / (2.0 - c)
    return (w1, -c * w1, w1)


def _boundary_fraction(psi, run):
    x = run.grid.axes[0]
    near = np.abs(x) > run.L - 4.0 * math.sqrt(run.eps)
    mass = np.abs(psi) ** 2
    total = mass.sum()
    if total == 0.0:
        return 0.0
    edge = 0.0
    for ax in range(run.n):
        sel = [slice(None)] * run.n
        sel[ax] = near
        edge = max(edge, mass[tuple(sel)].sum())
    return edge / total


def split_step(run: SpectralRun, psi0, T, monitor=True, save_times=None):
    """Advance ``psi0`` (array or WaveField on ``run.grid``) to time T.

    Strang splitting V/2 - K - V/2 with exact sub-flows; ``run.order = 4``
    composes three Strang steps (Yoshida).  With ``save_times`` a list of
    WaveFields is returned, otherwise the final WaveField.
    """
    psi = np.array(psi0.values if isinstance(psi0, WaveField) else psi0, dtype=complex)
    if psi.shape != run.grid.shape:
        raise DimensionMismatch(f"initial field shape {psi.shape} != grid {run.grid.shape}")
    eps = run.eps
    V = run.model.V(run.grid.points())
    k2 = run.wavenumbers()
    m = int(math.ceil(abs(T) / run.dt - 1e-9))
    h = T / m if m else 0.0
    weights = (1.0,) if run.order == 2 else _yoshida_weights()
    half_pot = [np.exp(-0.5j * w * h * V / eps) for w in weights]
    kin = [np.exp(-0.5j * eps * w * h * k2) for w in weights]
    targets = None
    if save_times is not None:
        targets = {}
        for j, ts in enumerate(np.atleast_1d(save_times)):
            i = int(round(ts / h)) if h else 0
            if h and abs(i * h - ts) > 1e-9 * max(1.0, abs(ts)):
                raise ValueError(f"save time {ts} is not a multiple of the step {h:g}")
            targets.setdefault(i, []).append(j)
        saved = [None] * len(np.atleast_1d(save_times))
    check_every = max(1, m // 20)

    def store(i):
        if targets and i in targets:
            for j in targets[i]:
                saved[j] = WaveField(run.grid, psi.copy(), i * h, eps)

    store(0)
    for i in range(1, m + 1):
        for hp, kk in zip(half_pot, kin):
            psi = hp * psi
            psi = np.fft.ifftn(kk * np.fft.fftn(psi))
            psi = hp * psi
        if monitor and (i % check_every == 0 or i == m):
            frac = _boundary_fraction(psi, run)
            if frac > MONITOR_TOL:
                raise DomainTooSmall(
                    f"{frac:.2e} of the mass within 4 sqrt(eps) of the boundary at t={i * h:.4g}")
        store(i)
    if targets is not None:
        return saved
    return WaveField(run.grid, psi, T, eps)


# ---------------------------------------------------------------------------
# free-particle focusing family
# ---------------------------------------------------------------------------

def caustic_initial(x, eps, a=0.5):
    """psi_in = exp(-a x^2) exp(-i x^2 / (2 eps)) (n = 1)."""
    x = np.asarray(x, dtype=float)
    return np.exp(-a * x * x - 0.5j * x * x / eps)


def gaussian_transform(xi, a=0.5):
    """Unitary Fourier transform of exp(-a x^2): (2a)^{-1/2} exp(-xi^2/(4a))."""
    return np.exp(-np.asarray(xi) ** 2 / (4.0 * a)) / math.sqrt(2.0 * a)


def caustic_exact(x, eps, t, a=0.5):
    """Free evolution of the focusing packet; closed form valid for all t.

    exp(-gamma x^2) evolves to (1 + 2 i eps gamma t)^{-1/2}
    exp(-gamma x^2 / (1 + 2 i eps gamma t)) with gamma = a + i/(2 eps).
    """
    x = np.asarray(x, dtype=float)
    gamma = a + 0.5j / eps
    d = 1.0 + 2j * eps * gamma * t
    return np.exp(-gamma * x * x / d) / np.sqrt(d)


def caustic_focus(x, eps, a=0.5):
    """psi(1, x) = e^{-i pi/4} eps^{-1/2} g_hat(x / eps) e^{i x^2 / (2 eps)}."""
    x = np.asarray(x, dtype=float)
    return (np.exp(-0.25j * np.pi) / math.sqrt(eps) * gaussian_transform(x / eps, a)
            * np.exp(0.5j * x * x / eps))


def caustic_beam_prediction(x, eps, t, beta=1.0, a=0.5, n_quad=None):
    """First-order beam superposition for the focusing family.

    At t = 1 this is psi(1, x) exp(-x^2 / (2 beta eps)).  For t < 1 the
    closed-form beam data (x0(1-t), -x0, M_in/(1 + t M_in), ...) are summed
    by a fine midpoint rule in x0.
    """
    x = np.asarray(x, dtype=float)
    if t > 1.0:
        raise UnsupportedOrder("the focusing family is only available for t <= 1")
    if t == 1.0:
        return caustic_focus(x, eps, a) * np.exp(-x * x / (2.0 * beta * eps))
    R = math.sqrt(math.log(1e16) / a)
    m = n_quad or int(math.ceil(2 * R / (0.05 * math.sqrt(eps) * min(1.0, 1 - t + 1e-3))))
    h = 2 * R / m
    x0 = -R + h * (np.arange(m) + 0.5)
    Min = -1.0 + 1j * beta
    d = 1.0 + t * Min
    M = Min / d
    xt = x0 * (1.0 - t)
    S = -0.5 * x0 * x0 + 0.5 * t * x0 * x0
    A = np.exp(-a * x0 * x0) / np.sqrt(d)
    Z = math.sqrt(beta / (2.0 * math.pi * eps))
    out = np.zeros(x.shape, dtype=complex)
    flat = x.reshape(-1)
    res = out.reshape(-1)
    for s in range(0, flat.size, 256):
        y = flat[s:s + 256, None]
        z = y - xt[None, :]
        T = S[None, :] - x0[None, :] * z + 0.5 * M * z * z
        res[s:s + 256] = Z * h * np.sum(A[None, :] * np.exp(1j * T / eps), axis=1)
    return out


def exact_caustic_family(eps, beta, t, grid: UniformGrid, a=0.5):
    """(exact field, beam-predicted field) on ``grid`` for the focusing family."""
    if grid.n != 1:
        raise DimensionMismatch("the focusing family is implemented for n = 1")
    if t > 1.0 or t < 0.0:
        raise UnsupportedOrder("t must lie in [0, 1]")
    x = grid.axes[0]
    exact = caustic_focus(x, eps, a) if t == 1.0 else caustic_exact(x, eps, t, a)
    pred = caustic_beam_prediction(x, eps, t, beta, a)
    return (WaveField(grid, exact, t, eps, {"kind": "exact"}),
            WaveField(grid, pred, t, eps, {"kind": "beam-prediction"}))


def caustic_error_integral(eps, beta=1.0, a=0.5):
    """int |g_hat(z)|^2 (1 - exp(-eps z^2 / (2 beta)))^2 dz."""
    f = lambda z: gaussian_transform(z, a) ** 2 * (1.0 - math.exp(-eps * z * z / (2 * beta))) ** 2
    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


# ---------------------------------------------------------------------------
# exact Gaussian packets in quadratic potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPacket:
    """exp(i/eps [ (x-q)^T alpha (x-q)/2 + p.(x-q) + gamma ]) with Im alpha > 0."""

    q: np.ndarray
    p: np.ndarray
    alpha: np.ndarray
    gamma: complex = 0.0

    @classmethod
    def from_data(cls, S_in, center, a, eps):
        """Packet equal to exp(-a|x-c|^2) exp(i S_in(x)/eps) for quadratic S_in."""
        if S_in.degree > 2:
            raise UnsupportedOrder("packet initial phase must be at most quadratic")
        n = S_in.n
        c = np.broadcast_to(np.asarray(center, dtype=float), (n,)).copy()
        p = np.array([S_in.derivative(tuple(int(i == j) for i in range(n)))(c) for j in range(n)])
        H = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                H[i, j] = S_in.derivative(tuple(e))(c)
        alpha = H + 2j * a * eps * np.eye(n)
        return cls(c, p.reshape(n), alpha, complex(S_in(c)))

    def evaluate(self, x, eps, amplitude=1.0):
        x = np.asarray(x, dtype=float)
        n = self.q.size
        if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        d = x - self.q
        quad = np.einsum("...i,ij,...j->...", d, self.alpha, d)
        return amplitude * np.exp(1j / eps * (0.5 * quad + d @ self.p + self.gamma))


def _quadratic_parts(model):
    V = model.potential
    if V.degree > 2:
        raise UnsupportedOrder("exact propagation needs a potential of degree <= 2")
    n = model.n
    zero = np.zeros(n)
    K = model.hess_V(zero[None])[0]
    b = model.grad_V(zero[None])[0]
    return K, b


def exact_quadratic_propagate(model, packet: GaussianPacket, T, eps, grid: UniformGrid):
    """Exact solution for a Gaussian packet under a degree <= 2 potential.

    With F = [[0, I], [-K, 0]] the packet centre follows the (affine) linear
    flow, alpha = P Z^{-1} where [Z; P] = expm(F t) [I; alpha_0], the
    amplitude is det(Z)^{-1/2} on the continuous branch and the phase
    offset integrates the Lagrangian p^2/2 - V(q).
    """
    K, b = _quadratic_parts(model)
    n = model.n
    F = np.zeros((2 * n + 1, 2 * n + 1))
    F[:n, n:2 * n] = np.eye(n)
    F[n:2 * n, :n] = -K
    F[n:2 * n, 2 * n] = -b
    X0 = np.concatenate([packet.q, packet.p, [1.0]])

    def state(t):
        return linalg.expm(F * t) @ X0

    def lag(t):
        s = state(t)
        q, p = s[:n], s[n:2 * n]
        return 0.5 * p @ p - model.V(q[None])[0]

    Flin = F[:2 * n, :2 * n]
    ZP0 = np.vstack([np.eye(n), packet.alpha])
    # continuous branch of det(Z)^{-1/2}
    ts = np.linspace(0.0, T, 2001) if T != 0 else np.zeros(1)
    dets = np.array([np.linalg.det((linalg.expm(Flin * t) @ ZP0)[:n]) for t in ts])
    phase = np.unwrap(np.angle(dets))
    ZP = linalg.expm(Flin * T) @ ZP0
    Z, P = ZP[:n], ZP[n:]
    alpha = P @ np.linalg.inv(Z)
    amp = np.abs(dets[-1]) ** -0.5 * np.exp(-0.5j * phase[-1])
    action = integrate.quad(lag, 0.0, T, epsabs=1e-14, epsrel=1e-13, limit=200)[0] if T else 0.0
    s = state(T)
    out = GaussianPacket(s[:n], s[n:2 * n], 0.5 * (alpha + alpha.T), packet.gamma + action)
    vals = out.evaluate(grid.points(), eps, amp)
    return WaveField(grid, vals, T, eps, {"kind": "exact-quadratic"})


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _trapezoid(vals, grid: UniformGrid):
    out = vals
    for ax, h in zip(range(grid.n), grid.spacing):
        out = integrate.trapezoid(out, dx=h, axis=0) if grid.count[ax] > 1 else out[0]
    return float(out)


def l2_norm(f: WaveField) -> float:
    return math.sqrt(_trapezoid(np.abs(f.values) ** 2, f.grid))


def l2_distance(f: WaveField, g: WaveField) -> float:
    if f.grid != g.grid:
        raise DimensionMismatch("fields live on different grids")
    return math.sqrt(_trapezoid(np.abs(f.values - g.values) ** 2, f.grid))
