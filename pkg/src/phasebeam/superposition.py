"""Beam superposition: initial data, per-beam Gaussians, assembly, residual.

The field at time t is the Lagrangian pullback of the phase-space integral,

    psi(t, y) = Z * sum_b w_b * rho(|y - x_b|) * a_b(y) * exp(i T_b(y) / eps),

where T_b is the order-(k+1) Taylor polynomial of the beam phase about the
ray point x_b(t), a_b = sum_l eps^l T_{k-1-2l}[A_l] and w_b the quadrature
weight of the seed.  The residual P[psi] is obtained per beam in closed form
from the same Taylor data and the ODE right-hand sides.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .beam_core import InitialBeamData, integrate_beams
from .errors import ConfigError, DimensionMismatch, UnsupportedOrder
from .flow import DEFAULT_DT
from .multiindex import add, multi_indices, multi_indices_upto, monomials, unit
from .wavefield import UniformGrid, WaveField

WEIGHT_FLOOR = 1e-16
PROFILE_KINDS = ("gaussian", "bump")


# ---------------------------------------------------------------------------
# amplitude profiles
# ---------------------------------------------------------------------------

class AmplitudeProfile:
    """Initial amplitude A_in with exact derivatives.

    ``gaussian``: exp(-a |x - c|^2), support cut where the value drops
    below 1e-16.  ``bump``: exp(1 - 1/(1 - |x - c|^2 / a^2)) on |x - c| < a.
    """

    def __init__(self, kind="gaussian", n=1, a=1.0, center=0.0, cut=WEIGHT_FLOOR):
        if kind not in PROFILE_KINDS:
            raise ConfigError(f"unknown amplitude profile {kind!r}")
        if a <= 0:
            raise ConfigError("profile parameter a must be positive")
        self.kind, self.n, self.a, self.cut = kind, int(n), float(a), float(cut)
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (self.n,)).copy()
        self._syms = sp.symbols(f"u0:{self.n}", real=True)
        r2 = sum(s ** 2 for s in self._syms)
        if kind == "gaussian":
            self._expr = sp.exp(-self.a * r2)
        else:
            self._expr = sp.exp(1 - 1 / (1 - r2 / self.a ** 2))
        self._cache = {}

    @classmethod
    def from_config(cls, n, cfg):
        return cls(cfg.get("kind", "gaussian"), n, cfg.get("a", 1.0), cfg.get("center", 0.0))

    def to_config(self):
        c = self.center.tolist()
        return {"kind": self.kind, "a": self.a, "center": c[0] if self.n == 1 else c}

    @property
    def radius(self):
        if self.kind == "gaussian":
            return math.sqrt(math.log(1.0 / self.cut) / self.a)
        return self.a

    def support_box(self):
        return self.center - self.radius, self.center + self.radius

    @property
    def width(self):
        return 2.0 * self.radius

    def _fn(self, alpha):
        alpha = tuple(alpha)
        if alpha not in self._cache:
            expr = self._expr
            for s, m in zip(self._syms, alpha):
                if m:
                    expr = sp.diff(expr, s, m)
            self._cache[alpha] = sp.lambdify(self._syms, sp.simplify(expr), "numpy")
        return self._cache[alpha]

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"points have {x.shape[-1]} components, expected {self.n}")
        return x - self.center

    def derivative(self, x, alpha):
        """d^alpha A_in at points ``x`` (shape (..., n))."""
        u = self._points(x)
        fn = self._fn(alpha)
        if self.kind == "gaussian":
            out = fn(*np.moveaxis(u, -1, 0))
            return np.broadcast_to(out, u.shape[:-1]).astype(float)
        s = np.sum(u * u, axis=-1) / self.a ** 2
        inside = s < 1.0
        out = np.zeros(u.shape[:-1])
        if np.any(inside):
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                vals = np.asarray(fn(*np.moveaxis(u[inside], -1, 0)), dtype=float)
            out[inside] = np.nan_to_num(np.broadcast_to(vals, out[inside].shape),
                                        nan=0.0, posinf=0.0, neginf=0.0)
        return out

    def __call__(self, x):
        return self.derivative(x, (0,) * self.n)


def initial_wave(S_in, A_in, eps, grid: UniformGrid) -> WaveField:
    """psi_in = A_in exp(i S_in / eps) on ``grid``."""
    y = grid.points()
    return WaveField(grid, A_in(y) * np.exp(1j * S_in(y) / eps), 0.0, eps)


# ---------------------------------------------------------------------------
# scalar ingredients
# ---------------------------------------------------------------------------

def normalization(n, eps, beta=1.0):
    """Z = (beta / (2 pi eps))^(n/2)."""
    if eps <= 0 or beta <= 0:
        raise ValueError("eps and beta must be positive")
    return (beta / (2.0 * math.pi * eps)) ** (n / 2.0)


def _smoothstep(r, delta_c):
    half = 0.5 * delta_c
    s = np.clip((np.asarray(r, dtype=float) - half) / half, 0.0, 1.0)
    return s, half


def cutoff(r, delta_c, k=2):
    """Quintic-smoothstep cutoff: 1 on r <= delta_c/2, 0 on r >= delta_c.

    For k = 1 no cutoff is needed and the weight is identically 1.
    """
    if k == 1:
        return np.ones_like(np.asarray(r, dtype=float))
    s, _ = _smoothstep(r, delta_c)
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def cutoff_derivatives(r, delta_c, k=2):
    """(rho, d rho/dr, d^2 rho/dr^2) of the cutoff."""
    if k == 1:
        one = np.ones_like(np.asarray(r, dtype=float))
        return one, 0.0 * one, 0.0 * one
    s, half = _smoothstep(r, delta_c)
    rho = 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
    d1 = -30.0 * s * s * (1.0 - s) ** 2 / half
    d2 = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / half ** 2
    return rho, d1, d2


@dataclass(frozen=True)
class SuperpositionConfig:
    eps: float
    k: int = 1
    beta: float = 1.0
    h0: float | None = None
    h0_scale: float = 1.0
    delta_c: float = 1.0
    auto_shrink: bool = True
    weight_floor: float = WEIGHT_FLOOR

    def __post_init__(self):
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.k not in (1, 2, 3):
            raise UnsupportedOrder(f"beam order k={self.k} not supported")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        if self.delta_c <= 0:
            raise ConfigError("delta_c must be positive")
        if self.h0 is not None and self.h0 <= 0:
            raise ConfigError("h0 must be positive")

    def seed_spacing(self, profile: AmplitudeProfile):
        if self.h0 is not None:
            return self.h0
        return default_h0(self.eps, profile, self.h0_scale)


def default_h0(eps, profile, scale=1.0):
    """min(sqrt(eps), width(supp A_in)/32), times ``scale``."""
    return scale * min(math.sqrt(eps), profile.width / 32.0)


# ---------------------------------------------------------------------------
# seeds and initial data
# ---------------------------------------------------------------------------

def seed_grid(profile: AmplitudeProfile, h0):
    """Midpoint seeds covering supp(A_in); returns ``(x0, weight)``.

    Seeds where A_in vanishes (below the support cut) are dropped.
    """
    lo, hi = profile.support_box()
    axes = []
    h = []
    for a, b in zip(lo, hi):
        m = max(1, int(math.ceil((b - a) / h0 - 1e-9)))
        step = (b - a) / m
        axes.append(a + step * (np.arange(m) + 0.5))
        h.append(step)
    x0 = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, profile.n)
    vals = profile(x0)
    keep = vals > (profile.cut if profile.kind == "gaussian" else 0.0)
    return x0[keep], float(np.prod(h))


def initial_beam_data(S_in, A_in: AmplitudeProfile, x0, k, beta) -> InitialBeamData:
    """Launch data: S = S_in(x0), p = grad S_in, M = Hess S_in + i beta I,
    m_alpha = d^alpha S_in (3 <= |alpha| <= k+1), d^alpha A_0 = d^alpha A_in
    (|alpha| <= k-1) and A_l = 0 for l >= 1."""
    n = S_in.n
    x0 = np.asarray(x0, dtype=float).reshape(-1, n)
    p0 = np.stack([S_in.derivative(unit(n, j))(x0) for j in range(n)], axis=-1)
    hess = np.empty((x0.shape[0], n, n))
    for i in range(n):
        for j in range(n):
            hess[:, i, j] = S_in.derivative(add(unit(n, i), unit(n, j)))(x0)
    jets = {a: S_in.derivative(a)(x0) for r in range(3, k + 2) for a in multi_indices(n, r)}
    amps = {(0, a): A_in.derivative(x0, a) for a in multi_indices_upto(n, k - 1)}
    return InitialBeamData(x0, p0, S_in(x0), hess, beta, k, jets, amps)


@dataclass(frozen=True)
class BeamSet:
    """Integrated beams plus their quadrature weights."""

    bundle: object
    weights: np.ndarray
    delta: np.ndarray | None = None

    @property
    def times(self):
        return self.bundle.times


def launch(model, S_in, A_in, config: SuperpositionConfig, T, save_times=None,
           dt=DEFAULT_DT) -> BeamSet:
    """Seed supp(A_in), build initial data and integrate every beam to T."""
    h0 = config.seed_spacing(A_in)
    x0, w = seed_grid(A_in, h0)
    if x0.shape[0] == 0:
        raise ConfigError("no beam seeds inside supp(A_in)")
    init = initial_beam_data(S_in, A_in, x0, config.k, config.beta)
    bundle = integrate_beams(model, init, config.k, T, dt, save_times=save_times)
    delta = (resolve_cutoff(bundle, config.delta_c) if config.auto_shrink
             else np.full(bundle.nbeams, config.delta_c))
    return BeamSet(bundle, np.full(x0.shape[0], w), delta)


# ---------------------------------------------------------------------------
# imaginary-part positivity and cutoff radius
# ---------------------------------------------------------------------------

def _probe_offsets(n, delta, count=200):
    """Probe displacements filling the ball |z| <= delta (shape (nz, n))."""
    if n == 1:
        r = np.linspace(-delta, delta, 2 * count + 1)
        r = r[r != 0.0]
        return r[:, None]
    r = np.linspace(delta / count, delta, count)
    th = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    R, TH = np.meshgrid(r, th, indexing="ij")
    return np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1).reshape(-1, 2)


def _imag_taylor(bundle, ti, z):
    """Im T_{k+1}[Phi](x + z) for every beam at saved index ti.

    ``z`` is (nz, n) shared by all beams or (nbeams, nz, n); returns (nbeams, nz).
    """
    phi = bundle.phase_table(ti)
    mono = monomials(z, bundle.k + 1)
    out = np.zeros((bundle.nbeams, z.shape[-2]))
    for a in multi_indices_upto(bundle.n, bundle.k + 1):
        if sum(a) < 2:
            continue
        m = mono[a] if mono[a].ndim == 2 else mono[a][None, :]
        out += np.imag(phi[a])[:, None] * m
    return out


def min_imag_eig(bundle, ti):
    M = bundle.dynamics.hessian(*bundle.dynamics.unpack(bundle.Y[ti])[2:])
    return np.linalg.eigvalsh(M.imag).min(axis=-1)


def imag_positivity_ratio(bundle, ti, delta):
    """min over beams and |z| <= delta of Im T_{k+1}[Phi](x+z) / |z|^2.

    ``delta`` may be a scalar or one radius per beam.
    """
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (bundle.nbeams,))
    unit_z = _probe_offsets(bundle.n, 1.0)
    z = delta[:, None, None] * unit_z[None]
    r2 = np.sum(z * z, axis=-1)
    return float(np.min(_imag_taylor(bundle, ti, z) / r2))


def resolve_cutoff(bundle, delta_c, time_indices=None, max_halvings=40):
    """Per-beam cutoff radius keeping Im T >= (lambda_min(Im M)/4) |z|^2.

    Each beam starts from ``delta_c`` and is halved until the bound holds on
    its support at every listed saved time (all of them by default).  For
    k = 1 the Taylor phase is exactly quadratic and nothing is shrunk.
    """
    nb = bundle.nbeams
    delta = np.full(nb, float(delta_c))
    if bundle.k == 1:
        return delta
    idx = list(range(bundle.times.size)) if time_indices is None else list(time_indices)
    lams = [min_imag_eig(bundle, ti) for ti in idx]
    unit_z = _probe_offsets(bundle.n, 1.0)
    u2 = np.sum(unit_z * unit_z, axis=-1)
    for _ in range(max_halvings):
        z = delta[:, None, None] * unit_z[None]
        r2 = delta[:, None] ** 2 * u2[None, :]
        bad = np.zeros(nb, dtype=bool)
        for ti, lam in zip(idx, lams):
            bad |= np.any(_imag_taylor(bundle, ti, z) < 0.25 * lam[:, None] * r2, axis=1)
        if not np.any(bad):
            return delta
        delta = np.where(bad, 0.5 * delta, delta)
    raise ConfigError("could not find a cutoff radius keeping Im T positive")


# ---------------------------------------------------------------------------
# assembly and residual
# ---------------------------------------------------------------------------

def _window(axes, center, radius):
    sl = []
    for ax, c in zip(axes, center):
        lo = int(np.searchsorted(ax, c - radius, side="left"))
        hi = int(np.searchsorted(ax, c + radius, side="right"))
        if hi <= lo:
            return None
        sl.append(slice(lo, hi))
    return tuple(sl)


def _sum_mono(coeffs, mono, idx):
    total = 0.0
    for a in idx:
        total = total + coeffs[a] * mono[a]
    return total


class _BeamEvaluator:
    """Evaluates beam contributions (and their residuals) on a grid."""

    def __init__(self, beams: BeamSet, t, config: SuperpositionConfig, grid: UniformGrid,
                 delta_c=None):
        bundle = beams.bundle
        if bundle.nbeams == 0:
            raise ValueError("empty beam list")
        if grid.n != bundle.n:
            raise DimensionMismatch("output grid and beams differ in dimension")
        if config.k != bundle.k:
            raise UnsupportedOrder(f"config has k={config.k}, beams have k={bundle.k}")
        self.bundle, self.weights = bundle, np.asarray(beams.weights, dtype=float)
        self.cfg, self.grid = config, grid
        self.ti = bundle.time_index(t)
        self.t = float(bundle.times[self.ti])
        self.n, self.k, self.eps = bundle.n, bundle.k, config.eps
        if delta_c is not None:
            delta_c = np.broadcast_to(np.asarray(delta_c, dtype=float), (bundle.nbeams,))
        elif beams.delta is not None:
            delta_c = np.asarray(beams.delta, dtype=float)
        elif config.auto_shrink:
            delta_c = resolve_cutoff(bundle, config.delta_c, [self.ti])
        else:
            delta_c = np.full(bundle.nbeams, config.delta_c)
        self.delta_c = delta_c
        self.Z = normalization(self.n, self.eps, config.beta)
        self.phi = bundle.phase_table(self.ti)
        self.amp = bundle.amp_table(self.ti)
        self.x = bundle.x[self.ti]
        self.p = bundle.p[self.ti]
        lam = min_imag_eig(bundle, self.ti)
        logw = math.log(1.0 / config.weight_floor)
        if self.k == 1:
            # exact quadratic phase: Im T >= lam |z|^2 / 2
            self.radius = np.sqrt(2.0 * logw * self.eps / lam)
        else:
            self.radius = np.minimum(self.delta_c, np.sqrt(4.0 * logw * self.eps / lam))
        self.axes = grid.axes
        self.phase_idx = multi_indices_upto(self.n, self.k + 1)

    def _local(self, b):
        sl = _window(self.axes, self.x[b], self.radius[b])
        if sl is None:
            return None, None
        y = np.stack(np.meshgrid(*[ax[s] for ax, s in zip(self.axes, sl)], indexing="ij"),
                     axis=-1)
        return sl, y

    def _coeffs(self, table, b):
        return {key: v[b] for key, v in table.items()}

    def amplitude(self, amp, mono, shift=None):
        """sum_l eps^l sum_alpha amp[l, alpha + shift] z^alpha / alpha!."""
        n, k, eps = self.n, self.k, self.eps
        shift = (0,) * n if shift is None else shift
        total = 0.0
        for l in sorted({key[0] for key in amp}):
            top = k - 1 - 2 * l - sum(shift)
            if top < 0:
                continue
            acc = 0.0
            for a in multi_indices_upto(n, top):
                acc = acc + amp[(l, add(a, shift))] * mono[a]
            total = total + eps ** l * acc
        return total

    def contribution(self, b, residual=False):
        sl, y = self._local(b)
        if sl is None:
            return None, None
        n, k, eps = self.n, self.k, self.eps
        z = y - self.x[b]
        r = np.sqrt(np.sum(z * z, axis=-1))
        mask = r <= self.radius[b]
        phi = self._coeffs(self.phi, b)
        amp = self._coeffs(self.amp, b)
        mono = monomials(z, k + 1)
        T = _sum_mono(phi, mono, self.phase_idx)
        a = self.amplitude(amp, mono)
        rho, d1, d2 = cutoff_derivatives(r, self.delta_c[b], k)
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            expo = np.exp(1j * T / eps)
        scale = self.Z * self.weights[b]
        if not residual:
            val = np.where(mask, rho * a * expo, 0.0)
            return sl, scale * val
        # residual: e^{iT/eps} [b G - i eps (b_t + grad T . grad b + lap T b / 2) - eps^2 lap b / 2]
        dphi = self._coeffs(self.bundle_rates[0], b)
        damp = self._coeffs(self.bundle_rates[1], b)
        p = self.p[b]
        gradT = [_sum_mono({a_: phi[add(a_, unit(n, j))] for a_ in multi_indices_upto(n, k)},
                           mono, multi_indices_upto(n, k)) for j in range(n)]
        lapT = 0.0
        for j in range(n):
            e2 = add(unit(n, j), unit(n, j))
            lapT = lapT + _sum_mono({a_: phi[add(a_, e2)] for a_ in multi_indices_upto(n, k - 1)},
                                    mono, multi_indices_upto(n, k - 1))
        Tt = _sum_mono(dphi, mono, self.phase_idx) - sum(p[j] * gradT[j] for j in range(n))
        G = Tt + 0.5 * sum(g * g for g in gradT) + self.model.V(y)
        grad_a = [self.amplitude(amp, mono, unit(n, j)) for j in range(n)]
        lap_a = sum(self.amplitude(amp, mono, add(unit(n, j), unit(n, j))) for j in range(n))
        a_t = self.amplitude(damp, mono) - sum(p[j] * grad_a[j] for j in range(n))
        with np.errstate(divide="ignore", invalid="ignore"):
            over_r = np.where(r > 0, 1.0 / r, 0.0)
        grad_rho = [d1 * z[..., j] * over_r for j in range(n)]
        lap_rho = d2 + (n - 1) * d1 * over_r
        rho_t = -sum(p[j] * grad_rho[j] for j in range(n))
        bval = rho * a
        b_t = rho_t * a + rho * a_t
        grad_b = [grad_rho[j] * a + rho * grad_a[j] for j in range(n)]
        lap_b = lap_rho * a + 2.0 * sum(grad_rho[j] * grad_a[j] for j in range(n)) + rho * lap_a
        transport = b_t + sum(gradT[j] * grad_b[j] for j in range(n)) + 0.5 * lapT * bval
        val = bval * G - 1j * eps * transport - 0.5 * eps * eps * lap_b
        return sl, scale * np.where(mask, val * expo, 0.0)

    def field(self, residual=False, model=None):
        if residual:
            self.model = self.bundle.dynamics.model if model is None else model
            self.bundle_rates = (self.bundle.phase_rates(self.ti), self.bundle.amp_rates(self.ti))
        out = np.zeros(self.grid.shape, dtype=complex)
        for b in range(self.bundle.nbeams):
            sl, val = self.contribution(b, residual)
            if sl is not None:
                out[sl] += val
        return out


def assemble(beams: BeamSet, t, config: SuperpositionConfig, grid: UniformGrid,
             delta_c=None) -> WaveField:
    """psi^eps(t, .) on ``grid`` from integrated beams (fixed beam order)."""
    ev = _BeamEvaluator(beams, t, config, grid, delta_c)
    return WaveField(grid, ev.field(), ev.t, config.eps,
                     {"k": config.k, "beta": config.beta, "delta_c_min": float(ev.delta_c.min()),
                      "nbeams": int(beams.bundle.nbeams)})


def residual_field(beams: BeamSet, t, config: SuperpositionConfig, grid: UniformGrid,
                   model=None, delta_c=None) -> WaveField:
    """P[psi^eps](t, .) = -i eps psi_t - eps^2/2 Lap psi + V psi, per beam in
    closed form (cutoff derivatives included)."""
    model = beams.bundle.dynamics.model if model is None else model
    ev = _BeamEvaluator(beams, t, config, grid, delta_c)
    return WaveField(grid, ev.field(residual=True, model=model), ev.t, config.eps,
                     {"k": config.k, "beta": config.beta, "delta_c_min": float(ev.delta_c.min()),
                      "quantity": "residual"})


def taylor_G(bundle, ti, z):
    """G = T_t + |grad T|^2/2 + V(x + z) for every beam at saved index ti.

    ``z`` has shape (nz, n); returns (nbeams, nz).  For an order-k beam this
    vanishes to order k+2 in |z|.
    """
    n, k = bundle.n, bundle.k
    phi = bundle.phase_table(ti)
    dphi = bundle.phase_rates(ti)
    x, p = bundle.x[ti], bundle.p[ti]
    mono = monomials(z, k + 1)
    idx = multi_indices_upto(n, k + 1)
    col = lambda v: np.asarray(v)[:, None]
    gradT = [sum(col(phi[add(a, unit(n, j))]) * mono[a][None, :]
                 for a in multi_indices_upto(n, k)) for j in range(n)]
    Tt = sum(col(dphi[a]) * mono[a][None, :] for a in idx)
    Tt = Tt - sum(col(p[:, j]) * gradT[j] for j in range(n))
    y = x[:, None, :] + z[None, :, :]
    model = bundle.dynamics.model
    return Tt + 0.5 * sum(g * g for g in gradT) + model.V(y)


# ---------------------------------------------------------------------------
# phase-space superposition
# ---------------------------------------------------------------------------

def phase_space_beams(S_in, box, counts, beta=1.0, A_in=None):
    """First-order beams at the midpoints of a (x0, p0) rectangle (n = 1).

    Each beam starts with S = S_in(x0), M = i beta and A = A_in(x0) (1 when
    no profile is given); the weight is the cell area.
    """
    if S_in.n != 1:
        raise DimensionMismatch("phase-space superposition is implemented for n = 1")
    (xa, xb), (pa, pb) = box
    nx, npn = counts
    hx, hp = (xb - xa) / nx, (pb - pa) / npn
    xs = xa + hx * (np.arange(nx) + 0.5)
    ps = pa + hp * (np.arange(npn) + 0.5)
    X0, P0 = np.meshgrid(xs, ps, indexing="ij")
    x0, p0 = X0.reshape(-1, 1), P0.reshape(-1, 1)
    amp = np.ones(x0.shape[0]) if A_in is None else A_in(x0)
    init = InitialBeamData(x0, p0, S_in(x0), np.zeros((x0.shape[0], 1, 1)), beta, 1, {},
                           {(0, (0,)): amp})
    return init, np.full(x0.shape[0], hx * hp)


def phase_space_assemble(model, S_in, box, counts, t, config: SuperpositionConfig,
                         grid: UniformGrid, dt=DEFAULT_DT, A_in=None, residual=False):
    """Product-midpoint quadrature of first-order beams over a phase-space box."""
    if model.n != 1:
        raise DimensionMismatch("phase-space superposition is implemented for n = 1")
    if config.k != 1:
        raise UnsupportedOrder("phase-space superposition uses first-order beams")
    init, w = phase_space_beams(S_in, box, counts, config.beta, A_in)
    bundle = integrate_beams(model, init, 1, t, dt, save_times=[t])
    beams = BeamSet(bundle, w)
    if residual:
        return residual_field(beams, t, config, grid, model)
    return assemble(beams, t, config, grid)
