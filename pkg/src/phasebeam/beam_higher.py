"""Taylor hierarchies for k-th order beams (k <= 3).

Phase coefficients ``phi_alpha(t) = d^alpha_y Phi(t, x(t))`` with
``3 <= |alpha| <= k+1`` obey linear ODEs along the ray,

    d/dt m_alpha + sum_eta c_{alpha,eta} m_eta + d_alpha = 0,

obtained by differentiating ``G = Phi_t + |grad Phi|^2/2 + V`` and dropping
the transport terms that cancel against ``dx/dt = p``.  For the kinetic
energy |p|^2/2 every coefficient is a Leibniz contraction, so the systems
are generated programmatically for any order and dimension.

The amplitude coefficients ``a_{l,alpha} = d^alpha A_l(t, x(t))`` for
``|alpha| <= k-1-2l`` satisfy the differentiated transport equations
``L A_0 = 0``, ``L A_l = (i/2) Lap A_{l-1}`` restricted to the ray.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .errors import DimensionMismatch, UnsupportedOrder
from .multiindex import add, below, mbinom, multi_indices, multi_indices_upto, sub, unit

MAX_K = 3


def amplitude_levels(k):
    """Number of amplitude levels N = floor((k-1)/2) + 1."""
    return (k - 1) // 2 + 1


def amplitude_indices(n, k):
    """(l, alpha) pairs carried by an order-k beam."""
    out = []
    for l in range(amplitude_levels(k)):
        for a in multi_indices_upto(n, k - 1 - 2 * l):
            out.append((l, a))
    return out


def _key(g1, g2):
    return (g1, g2) if g1 <= g2 else (g2, g1)


@dataclass(frozen=True)
class PhaseJetSystem:
    """Coefficient generator for the phase hierarchy of orders 3..max_order.

    ``linear[alpha]`` holds ``(coef, M-index, eta)`` triples and
    ``source[alpha]`` holds ``(coef, gamma1, gamma2)`` triples such that

        d/dt m_alpha = sum coef * phi[M-index] * m[eta]
                     + sum coef * phi[gamma1] * phi[gamma2] - d^alpha V(x).
    """

    n: int
    max_order: int
    linear: dict
    source: dict

    @property
    def indices(self):
        return [a for r in range(3, self.max_order + 1) for a in multi_indices(self.n, r)]

    def c_coefficients(self, alpha, M):
        """``c_{alpha,eta}`` as a dict over eta, given the Hessian M (..., n, n)."""
        out = {}
        for coef, g2, eta in self.linear[alpha]:
            out[eta] = out.get(eta, 0.0) - coef * _m_entry(M, g2)
        return out

    def d_term(self, alpha, x, phi, model):
        """``d_alpha``: potential derivative plus products of lower jets."""
        val = model.dV(x, alpha)
        for coef, g1, g2 in self.source[alpha]:
            val = val - coef * phi[g1] * phi[g2]
        return val

    def rhs(self, phi, dV):
        """Time derivatives of every jet; ``dV[alpha]`` holds d^alpha V(x)."""
        out = {}
        for alpha in self.indices:
            val = -dV[alpha]
            for coef, g1, g2 in self.linear[alpha]:
                val = val + coef * phi[g1] * phi[g2]
            for coef, g1, g2 in self.source[alpha]:
                val = val + coef * phi[g1] * phi[g2]
            out[alpha] = val
        return out


def _m_entry(M, g):
    idx = [i for i, a in enumerate(g) for _ in range(a)]
    return M[..., idx[0], idx[1]]


def derive_phase_jet_system(n, k=None, max_order=None) -> PhaseJetSystem:
    """Generate the linear jet ODEs for orders 3..k+1 (or up to ``max_order``).

    Differentiating |grad Phi|^2/2 by d^alpha gives
    ``1/2 sum_j sum_{beta<=alpha} C(alpha,beta) phi_{beta+e_j} phi_{alpha-beta+e_j}``;
    the beta = 0 and beta = alpha terms are the transport part and drop out.
    """
    if max_order is None:
        if k is None or k < 1 or k > MAX_K:
            raise UnsupportedOrder(f"beam order k={k} not supported (1..{MAX_K})")
        max_order = k + 1
    if n not in (1, 2):
        raise DimensionMismatch("n must be 1 or 2")
    linear, source = {}, {}
    for r in range(3, max_order + 1):
        for alpha in multi_indices(n, r):
            acc = {}
            for j in range(n):
                e = unit(n, j)
                for beta in below(alpha):
                    if sum(beta) == 0 or beta == alpha:
                        continue
                    key = _key(add(beta, e), add(sub(alpha, beta), e))
                    acc[key] = acc.get(key, 0.0) - 0.5 * mbinom(alpha, beta)
            lin, src = [], []
            for (g1, g2), c in acc.items():
                if c == 0.0:
                    continue
                if sum(g1) == 2 and sum(g2) == r:
                    lin.append((c, g1, g2))
                elif sum(g2) == 2 and sum(g1) == r:
                    lin.append((c, g2, g1))
                else:
                    src.append((c, g1, g2))
            linear[alpha] = tuple(lin)
            source[alpha] = tuple(src)
    return PhaseJetSystem(n=n, max_order=max_order, linear=linear, source=source)


@dataclass(frozen=True)
class AmplitudeSystem:
    """Transport system for the amplitude Taylor table of an order-k beam.

    ``terms[(l, alpha)]`` is a tuple of ``(coef, phase-index, amp-key)`` with
    ``d/dt a[l, alpha] = sum coef * phi[phase-index] * a[amp-key]``, plus
    ``sources[(l, alpha)]`` of ``(coef, amp-key)`` for the (i/2) Lap A_{l-1}
    coupling.
    """

    n: int
    k: int
    terms: dict
    sources: dict

    @property
    def indices(self):
        return amplitude_indices(self.n, self.k)

    def rhs(self, phi, amp):
        out = {}
        for key in self.indices:
            val = 0.0
            for coef, g, akey in self.terms[key]:
                val = val + coef * phi[g] * amp[akey]
            for coef, akey in self.sources[key]:
                val = val + coef * amp[akey]
            out[key] = val
        return out


def derive_amplitude_system(n, k) -> AmplitudeSystem:
    if k < 1 or k > MAX_K:
        raise UnsupportedOrder(f"beam order k={k} not supported (1..{MAX_K})")
    terms, sources = {}, {}
    for l, alpha in amplitude_indices(n, k):
        acc = {}
        for beta in below(alpha):
            c = mbinom(alpha, beta)
            for j in range(n):
                e = unit(n, j)
                # grad Phi . grad A, transport term (beta = 0) removed
                if sum(beta) > 0:
                    key = (add(beta, e), (l, add(sub(alpha, beta), e)))
                    acc[key] = acc.get(key, 0.0) - c
                # (1/2) Lap Phi * A
                key = (add(beta, add(e, e)), (l, sub(alpha, beta)))
                acc[key] = acc.get(key, 0.0) - 0.5 * c
        terms[(l, alpha)] = tuple((c, g, a) for (g, a), c in acc.items() if c != 0.0)
        src = []
        if l >= 1:
            for j in range(n):
                e = unit(n, j)
                src.append((0.5j, (l - 1, add(alpha, add(e, e)))))
        sources[(l, alpha)] = tuple(src)
    return AmplitudeSystem(n=n, k=k, terms=terms, sources=sources)


def evolve_phase_jet(model, init, k, T, dt, save_times=None):
    """Integrate the phase hierarchy along the rays of ``init``.

    The ray, level-set matrices and jets are advanced together by one RK4
    scheme so every stage sees a consistent Hessian.  Returns a dict
    ``alpha -> array (ntimes, nbeams)`` for 3 <= |alpha| <= k+1.
    """
    from .beam_core import integrate_beams

    bundle = integrate_beams(model, init, k, T, dt, save_times=save_times)
    return {a: bundle.jet(a) for a in bundle.jet_indices}


def evolve_amplitude_hierarchy(model, init, k, T, dt, save_times=None):
    """Amplitude table ``(l, alpha) -> array (ntimes, nbeams)``."""
    from .beam_core import integrate_beams

    bundle = integrate_beams(model, init, k, T, dt, save_times=save_times)
    return {key: bundle.amp(key) for key in bundle.amp_indices}


# ---------------------------------------------------------------------------
# Level-set route to higher phase derivatives (n = 1)
# ---------------------------------------------------------------------------

def levelset_jet_initial(S_in, x0, beta, order):
    """Phase-space derivatives of g(0, x, p) = x + i (p - S_in'(x)) / beta.

    Returns ``{(j, l): value}`` for j + l <= order (n = 1 only).
    """
    if S_in.n != 1:
        raise UnsupportedOrder("level-set jets are implemented for n = 1 only")
    x0 = np.asarray(x0, dtype=float)
    g = {}
    for tot in range(order + 1):
        for j in range(tot + 1):
            g[(j, tot - j)] = np.zeros(x0.shape, dtype=complex)
    g[(1, 0)] = 1.0 - 1j * S_in.derivative((2,))(x0) / beta + 0 * x0
    if order >= 1:
        g[(0, 1)] = np.full(x0.shape, 1j / beta)
    for j in range(2, order + 1):
        g[(j, 0)] = -1j * S_in.derivative((j + 1,))(x0) / beta + 0 * x0
    return g


def levelset_jet_rhs(g, x, model, order):
    """d/dt of the phase-space derivatives g_{jl} along a ray (n = 1).

    From d_x^j d_p^l of g_t + p g_x - V'(x) g_p = 0:
    d/dt g_{jl} = -l g_{j+1,l-1} + sum_{i>=1} C(j,i) V^(i+1)(x) g_{j-i,l+1}.
    """
    vd = {i: model.dV(x, (i,)) for i in range(2, order + 2)}
    out = {}
    for (j, l), _ in g.items():
        val = 0.0
        if l >= 1:
            val = val - l * g[(j + 1, l - 1)]
        for i in range(1, j + 1):
            val = val + comb(j, i) * vd[i + 1] * g[(j - i, l + 1)]
        out[(j, l)] = val
    return out


def evolve_levelset_jets(model, S_in, x0, beta, order, T, dt):
    """Integrate the ray together with g_{jl}, j + l <= order (n = 1).

    Returns ``(x(T), p(T), {(j, l): g_{jl}(T)})``.
    """
    from .flow import time_grid

    if model.n != 1:
        raise UnsupportedOrder("level-set jets are implemented for n = 1 only")
    x0 = np.asarray(x0, dtype=float)
    p0 = S_in.derivative((1,))(x0) + 0 * x0
    g = levelset_jet_initial(S_in, x0, beta, order)
    keys = sorted(g)
    t, h = time_grid(T, dt)

    def f(state):
        x, p, gv = state
        gd = dict(zip(keys, gv))
        r = levelset_jet_rhs(gd, x, model, order)
        return (p, -model.dV(x, (1,)), [r[k_] for k_ in keys])

    def axpy(s, a, d):
        return (s[0] + a * d[0], s[1] + a * d[1], [u + a * v for u, v in zip(s[2], d[2])])

    state = (x0, p0, [g[k_] for k_ in keys])
    for _ in range(t.size - 1):
        k1 = f(state)
        k2 = f(axpy(state, 0.5 * h, k1))
        k3 = f(axpy(state, 0.5 * h, k2))
        k4 = f(axpy(state, h, k3))
        state = (
            state[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            state[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            [s + h / 6 * (a + 2 * b + 2 * c + d)
             for s, a, b, c, d in zip(state[2], k1[2], k2[2], k3[2], k4[2])],
        )
    return state[0], state[1], dict(zip(keys, state[2]))


def _series_mul(a, b, order):
    out = [0.0] * (order + 1)
    for i, ai in enumerate(a):
        for j in range(order + 1 - i):
            out[i + j] = out[i + j] + ai * b[j]
    return out


def levelset_phase_derivative_recursion(g, phase_derivs, r):
    """Gradient of the order-r phase coefficient from level-set data (n = 1).

    ``g`` maps (j, l) to d_x^j d_p^l g at the ray point for j + l <= r;
    ``phase_derivs`` lists the known y-derivatives of the phase on the ray,
    ``[M, m_3, ..., m_r]`` (orders 2..r).  Differentiating the identity
    g(y, Phi_y(y)) = const r times isolates ``g_p * d_y m_r``; the rest is
    the Faa di Bruno sum over lower data.
    """
    if r not in (2, 3, 4):
        raise UnsupportedOrder(f"recursion supports r in 2..4, got {r}")
    if len(phase_derivs) != r - 1:
        raise ValueError(f"need phase derivatives of orders 2..{r}")
    # dq(s) = sum_{u=1}^{r} q^(u) s^u / u!, q = Phi_y, q^(u) = phi_{u+1};
    # the unknown q^(r) is left out.
    dq = [0.0] + [phase_derivs[u - 1] / factorial(u) for u in range(1, r)] + [0.0]
    powers = [[1.0] + [0.0] * r]
    for _ in range(r):
        powers.append(_series_mul(powers[-1], dq, r))
    known = 0.0
    for (j, l), gv in g.items():
        if j + l > r or j > r:
            continue
        # coefficient of s^r in g_{jl}/(j! l!) s^j dq^l
        c = powers[l][r - j] if r - j >= 0 else 0.0
        known = known + gv * c / (factorial(j) * factorial(l))
    known = known * factorial(r)
    return -known / g[(0, 1)]
