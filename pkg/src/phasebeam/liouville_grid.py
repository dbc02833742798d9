"""Semi-Lagrangian Liouville solver on uniform phase-space grids.

A field f(t, X) with L f = rhs (L = d/dt + H_p . grad_x - H_x . grad_p) is
computed node by node: the characteristic through (t, X) is traced back to
t = 0, the initial data are interpolated at the foot point and, for sourced
kinds, the ODE is integrated forward along the same characteristic.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, OutOfDomain
from .flow import DEFAULT_DT, integrate_rays, time_grid
from .wavefield import UniformGrid

MAX_NODES = 81 ** 4
RHS_KINDS = ("zero", "action", "levelset", "amplitude")


@dataclass(frozen=True)
class PhaseGridField:
    """Values on a uniform 2n-dimensional grid (x axes first, then p axes).

    ``values`` has shape ``grid.shape + payload_shape``; ``valid`` marks nodes
    whose characteristic stayed inside the box (all True for initial data).
    """

    grid: UniformGrid
    values: np.ndarray
    t: float = 0.0
    valid: np.ndarray | None = None
    name: str = "f"

    def __post_init__(self):
        if self.grid.n % 2:
            raise DimensionMismatch("phase-space grids have an even number of axes")
        if int(np.prod(self.grid.shape)) > MAX_NODES:
            raise ValueError(f"phase grid exceeds {MAX_NODES} nodes")
        vals = np.asarray(self.values)
        if vals.shape[: self.grid.n] != self.grid.shape:
            raise DimensionMismatch(f"values {vals.shape} do not start with grid {self.grid.shape}")
        if any(c < 4 for c in self.grid.count):
            raise ValueError("cubic interpolation needs at least 4 nodes per axis")
        valid = (np.ones(self.grid.shape, dtype=bool) if self.valid is None
                 else np.asarray(self.valid, dtype=bool))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid", valid)

    @property
    def n(self):
        return self.grid.n // 2

    @property
    def payload_shape(self):
        return self.values.shape[self.grid.n:]

    @classmethod
    def from_function(cls, grid: UniformGrid, fn, name="f"):
        """Nodal values of ``fn(X)`` with X of shape grid.shape + (2n,)."""
        return cls(grid, np.asarray(fn(grid.points())), 0.0, None, name)

    def to_csv(self, path):
        """Node coordinates followed by re/im columns of every payload entry."""
        n = self.n
        pts = self.grid.points().reshape(-1, 2 * n)
        vals = self.values.reshape(pts.shape[0], -1)
        cols = [f"x{i}" for i in range(n)] + [f"p{i}" for i in range(n)]
        comps = [""] if vals.shape[1] == 1 else [f"_{j}" for j in range(vals.shape[1])]
        head = cols + [f"{part}{c}" for c in comps for part in ("re", "im")] + ["valid"]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for X, v, ok in zip(pts, vals, self.valid.reshape(-1)):
                row = [repr(float(c)) for c in X]
                for c in v:
                    c = complex(c)
                    row += [repr(c.real), repr(c.imag)]
                w.writerow(row + [int(ok)])
        return Path(path)


def phase_grid(x_range, p_range, counts) -> UniformGrid:
    """Uniform grid on [x_lo, x_hi]^n x [p_lo, p_hi]^n (per-axis tuples allowed)."""
    xl, xh = np.atleast_1d(x_range[0]), np.atleast_1d(x_range[1])
    pl, ph = np.atleast_1d(p_range[0]), np.atleast_1d(p_range[1])
    n = max(xl.size, xh.size, pl.size, ph.size)
    lo = np.concatenate([np.broadcast_to(xl, (n,)), np.broadcast_to(pl, (n,))])
    hi = np.concatenate([np.broadcast_to(xh, (n,)), np.broadcast_to(ph, (n,))])
    return UniformGrid(tuple(lo), tuple(hi), tuple(np.broadcast_to(counts, (2 * n,))))


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def _stencil(grid: UniformGrid, X):
    """Per-axis 4-point stencils and Lagrange weights for points X (m, d)."""
    idx, wts = [], []
    for a, (lo, h, N) in enumerate(zip(grid.lo, grid.spacing, grid.count)):
        s = (X[:, a] - lo) / h
        i0 = np.clip(np.floor(s).astype(int) - 1, 0, N - 4)
        u = s - i0  # position relative to the first stencil node
        nodes = np.arange(4)
        w = np.ones((X.shape[0], 4))
        for j in range(4):
            for m in range(4):
                if m != j:
                    w[:, j] *= (u - nodes[m]) / (j - m)
        idx.append(i0[:, None] + nodes[None, :])
        wts.append(w)
    return idx, wts


def _inside(grid, X, tol=1e-12):
    lo = np.asarray(grid.lo)
    hi = np.asarray(grid.hi)
    span = hi - lo
    return np.all((X >= lo - tol * span) & (X <= hi + tol * span), axis=-1)


def interpolate(field: PhaseGridField, X, invalid="raise"):
    """Tensor-product cubic interpolation at points X (shape (..., 2n)).

    Exact for polynomials of degree <= 3 in each variable; stencils shift to
    one side near the box edges.  Points outside the box raise OutOfDomain.
    With ``invalid="raise"`` a stencil touching an invalid node raises,
    with ``invalid="nan"`` the result is NaN there.
    """
    X = np.asarray(X, dtype=float)
    d = field.grid.n
    if X.shape[-1] != d:
        raise DimensionMismatch(f"points have {X.shape[-1]} components, grid has {d} axes")
    lead = X.shape[:-1]
    P = X.reshape(-1, d)
    inside = _inside(field.grid, P)
    if not np.all(inside):
        bad = P[~inside][0]
        raise OutOfDomain(f"point {bad.tolist()} lies outside the phase grid box")
    idx, wts = _stencil(field.grid, P)
    payload = field.payload_shape
    out = np.zeros((P.shape[0],) + payload, dtype=np.result_type(field.values.dtype, float))
    ok = np.ones(P.shape[0], dtype=bool)
    for combo in itertools.product(range(4), repeat=d):
        w = np.ones(P.shape[0])
        node = []
        for a, j in enumerate(combo):
            w = w * wts[a][:, j]
            node.append(idx[a][:, j])
        node = tuple(node)
        vals = field.values[node]
        out += w.reshape((-1,) + (1,) * len(payload)) * vals
        ok &= field.valid[node]
    if not np.all(ok):
        if invalid == "raise":
            raise OutOfDomain("interpolation stencil touches nodes whose characteristics left the box")
        out[~ok] = np.nan
    return out.reshape(lead + payload)


def sample(field: PhaseGridField, X):
    """Field value at a phase point (strictly inside the box)."""
    return interpolate(field, X)


# ---------------------------------------------------------------------------
# characteristic transport
# ---------------------------------------------------------------------------

def _rk4(f, y, h):
    k1 = f(y)
    k2 = f([a + 0.5 * h * b for a, b in zip(y, k1)])
    k3 = f([a + 0.5 * h * b for a, b in zip(y, k2)])
    k4 = f([a + h * b for a, b in zip(y, k3)])
    return [a + h / 6.0 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]


def _forward(model, X0, payload, kind, t, dt):
    """Integrate the ray and payload from X0 (m, 2n) at time 0 to time t."""
    n = model.n
    _, h = time_grid(t, dt)
    steps = int(round(t / h)) if h else 0

    def f(y):
        X = y[0]
        x, p = X[:, :n], X[:, n:]
        out = [model.velocity(X)]
        if kind == "action":
            out.append(0.5 * np.sum(p * p, axis=-1) - model.V(x))
        elif kind in ("levelset", "amplitude"):
            gx, gp = y[1], y[2]
            out += [model.hess_V(x) @ gp, -gx]
            if kind == "amplitude":
                M = -gx / gp if n == 1 else -gx @ np.linalg.inv(gp)
                out.append(-0.5 * np.trace(M, axis1=-2, axis2=-1) * y[3])
        return out

    y = [X0] + list(payload)
    for _ in range(steps):
        y = _rk4(f, y, h)
    return y


def _trace_back(model, grid, t, dt):
    pts = grid.points().reshape(-1, grid.n)
    if t == 0:
        return pts
    _, X0, _ = integrate_rays(model, pts, -t, dt, keep="last")
    return X0


def corner_excursion(model, grid, t, dt=DEFAULT_DT):
    """Per-axis maximum displacement of the box corner rays traced back over [0, t].

    A node X of the box has its foot point inside whenever X lies at least this
    far from the boundary, for flows whose speed is largest at the corners.
    """
    lo, hi = np.asarray(grid.lo, float), np.asarray(grid.hi, float)
    corners = np.array([np.where(c, hi, lo) for c in
                        itertools.product((False, True), repeat=grid.n)])
    if t == 0:
        return np.zeros(grid.n)
    _, X, _ = integrate_rays(model, corners, -t, dt)
    return np.max(np.abs(X - corners[None]), axis=(0, 1))


def _foot_mask(grid, feet, strict):
    inside = _inside(grid, feet)
    if strict and not np.all(inside):
        flat = int(np.flatnonzero(~inside)[0])
        node = np.unravel_index(flat, grid.shape)
        X = grid.points().reshape(-1, grid.n)[flat]
        raise OutOfDomain(f"foot point of node {tuple(int(i) for i in node)} "
                          f"(X={X.tolist()}) leaves the grid box")
    return inside


def _interp_at(field, feet, inside):
    out = np.full((feet.shape[0],) + field.payload_shape, np.nan,
                  dtype=np.result_type(field.values.dtype, float))
    if np.any(inside):
        out[inside] = interpolate(field, feet[inside], invalid="nan")
    return out


def advect(model, initial: PhaseGridField, rhs_kind, t, dt=DEFAULT_DT, companion=None,
           strict=True) -> PhaseGridField:
    """Solve L f = rhs on the grid of ``initial`` up to time ``t``.

    rhs_kind:
      ``zero``      pure transport (level-set functions, w),
      ``action``    L S = p.H_p - H = |p|^2/2 - V,
      ``levelset``  payload (..., 2, n, n) holding (g_x, g_p) with
                    L g_x = H_xx g_p, L g_p = -g_x,
      ``amplitude`` L A = -tr(M) A / 2 with M = -g_x g_p^{-1}; needs the
                    initial (g_x, g_p) field as ``companion``.
    With ``strict`` a foot point outside the box raises OutOfDomain, otherwise
    such nodes are marked invalid and hold NaN.
    """
    if rhs_kind not in RHS_KINDS:
        raise ValueError(f"unknown rhs kind {rhs_kind!r}")
    if t < 0:
        raise ValueError("advect integrates forward in time (t >= 0)")
    grid = initial.grid
    feet = _trace_back(model, grid, t, dt)
    inside = _foot_mask(grid, feet, strict)
    f0 = _interp_at(initial, feet, inside)
    ok = inside & np.all(np.isfinite(f0.reshape(feet.shape[0], -1)), axis=1)
    vals = f0
    if rhs_kind != "zero" and t > 0:
        X0 = np.where(ok[:, None], feet, 0.0)
        if rhs_kind == "action":
            vals = _forward(model, X0, [np.where(ok, f0, 0.0)], "action", t, dt)[1]
        elif rhs_kind == "levelset":
            g = np.where(ok[:, None, None, None], f0, _identity_levelset(model.n))
            gx, gp = _forward(model, X0, [g[:, 0], g[:, 1]], "levelset", t, dt)[1:]
            vals = np.stack([gx, gp], axis=1)
        else:
            if companion is None:
                raise ValueError("amplitude transport needs the initial level-set field")
            g0 = _interp_at(companion, feet, inside)
            ok &= np.all(np.isfinite(g0.reshape(feet.shape[0], -1)), axis=1)
            g0 = np.where(ok[:, None, None, None], g0, _identity_levelset(model.n))
            A0 = np.where(ok, f0, 0.0)
            vals = _forward(model, X0, [g0[:, 0], g0[:, 1], A0], "amplitude", t, dt)[3]
        vals = np.where(ok.reshape((-1,) + (1,) * (vals.ndim - 1)), vals, np.nan)
    shape = grid.shape + initial.payload_shape
    return PhaseGridField(grid, np.asarray(vals).reshape(shape), t, ok.reshape(grid.shape),
                          initial.name)


def _identity_levelset(n):
    return np.stack([np.eye(n), 1j * np.eye(n)]).astype(complex)


# ---------------------------------------------------------------------------
# the full first-order table
# ---------------------------------------------------------------------------

def initial_fields(model, S_in, A_in, beta, grid: UniformGrid):
    """Initial closures on the grid: S_in(x), (g_x, g_p), A_in(x), w = p - grad S_in."""
    n = model.n
    X = grid.points()
    x, p = X[..., :n], X[..., n:]
    grad = np.stack([S_in.derivative(tuple(int(i == j) for i in range(n)))(x)
                     for j in range(n)], axis=-1)
    hess = np.empty(grid.shape + (n, n))
    for i in range(n):
        for j in range(n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            hess[..., i, j] = S_in.derivative(tuple(e))(x)
    gx = np.eye(n) - 1j * hess / beta
    gp = np.broadcast_to((1j / beta) * np.eye(n), grid.shape + (n, n))
    return {
        "S": PhaseGridField(grid, S_in(x), 0.0, None, "S"),
        "g": PhaseGridField(grid, np.stack([gx, gp], axis=len(grid.shape)), 0.0, None, "g"),
        "A": PhaseGridField(grid, A_in(x).astype(complex), 0.0, None, "A"),
        "w": PhaseGridField(grid, p - grad if n > 1 else (p - grad)[..., 0], 0.0, None, "w"),
    }


def eulerian_beam_table(model, S_in, A_in, beta, grid: UniformGrid, t, dt=DEFAULT_DT,
                        strict=False):
    """S, g_x, g_p, M, A and w on the grid at time t from one shared trace.

    Returns a dict of PhaseGridFields; nodes whose foot point leaves the box
    are invalid (or raise with ``strict``).
    """
    init = initial_fields(model, S_in, A_in, beta, grid)
    feet = _trace_back(model, grid, t, dt)
    inside = _foot_mask(grid, feet, strict)
    if t == 0:
        # feet are the nodes themselves: take the closures without interpolating
        m = feet.shape[0]
        S0, g0, A0, w0 = (init[key].values.reshape((m,) + init[key].payload_shape)
                          for key in ("S", "g", "A", "w"))
    else:
        S0 = _interp_at(init["S"], feet, inside)
        g0 = _interp_at(init["g"], feet, inside)
        A0 = _interp_at(init["A"], feet, inside)
        w0 = _interp_at(init["w"], feet, inside)
    ok = inside.copy()
    for arr in (S0, g0, A0, w0):
        ok &= np.all(np.isfinite(arr.reshape(feet.shape[0], -1)), axis=1)
    n = model.n
    X0 = np.where(ok[:, None], feet, 0.0)
    g0 = np.where(ok[:, None, None, None], g0, _identity_levelset(n))
    if t > 0:
        _, gx, gp, A = _forward(model, X0, [g0[:, 0], g0[:, 1], np.where(ok, A0, 0.0)],
                                "amplitude", t, dt)
        S = _forward(model, X0, [np.where(ok, S0, 0.0)], "action", t, dt)[1]
    else:
        gx, gp, A, S = g0[:, 0], g0[:, 1], A0, S0
    M = -gx @ np.linalg.inv(gp)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    valid = ok.reshape(grid.shape)

    def mk(vals, name):
        vals = np.where(ok.reshape((-1,) + (1,) * (np.ndim(vals) - 1)), vals, np.nan)
        return PhaseGridField(grid, vals.reshape(grid.shape + np.shape(vals)[1:]), t, valid, name)

    return {"S": mk(S, "S"), "g_x": mk(gx, "g_x"), "g_p": mk(gp, "g_p"), "M": mk(M, "M"),
            "A": mk(A, "A"), "w": mk(w0, "w")}
