import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasebeam.errors import DomainTooSmall, UnsupportedOrder
from phasebeam.hamiltonian import HamiltonianModel
from phasebeam.polynomial import Polynomial
from phasebeam.reference import (GaussianPacket, caustic_error_integral, caustic_exact,
                                 caustic_focus, caustic_initial, exact_caustic_family,
                                 exact_quadratic_propagate, gaussian_transform, l2_distance,
                                 l2_norm, make_run, split_step)
from phasebeam.wavefield import UniformGrid, WaveField

EPS = 0.05


def _packet_field(run, S_in, a=1.0, center=0.2):
    packet = GaussianPacket.from_data(S_in, center, a, EPS)
    return packet, WaveField(run.grid, packet.evaluate(run.grid.points(), EPS), 0.0, EPS)


def test_split_step_zero_time(quartic_model):
    run = make_run(quartic_model, EPS, 4.0)
    _, psi0 = _packet_field(run, Polynomial.univariate([0, 0.5]))
    out = split_step(run, psi0, 0.0)
    np.testing.assert_array_equal(out.values, psi0.values)


def test_free_gaussian_matches_exact(free_model):
    run = make_run(free_model, EPS, 5.0)
    packet, psi0 = _packet_field(run, Polynomial.univariate([0, 0.5, -0.2]))
    num = split_step(run, psi0, 0.5)
    ex = exact_quadratic_propagate(free_model, packet, 0.5, EPS, run.grid)
    err = l2_distance(num, ex)
    print("free packet split-step vs exact", err)
    assert err <= 1e-6


def test_harmonic_periodicity(harmonic_model):
    run = make_run(harmonic_model, EPS, 5.0, order=4)
    _, psi0 = _packet_field(run, Polynomial.univariate([0, 0.3, 0.4]), a=5.0)
    out = split_step(run, psi0, 2 * np.pi)
    diff = WaveField(run.grid, np.abs(out.values) - np.abs(psi0.values), 0.0, EPS)
    print("harmonic period |psi| drift", l2_norm(diff))
    assert l2_norm(diff) <= 1e-6


def test_exact_quadratic_matches_split_step(harmonic_model):
    run = make_run(harmonic_model, EPS, 5.0, order=4)
    packet, psi0 = _packet_field(run, Polynomial.univariate([0, -0.4, 0.3]), a=2.0)
    num = split_step(run, psi0, 1.3)
    ex = exact_quadratic_propagate(harmonic_model, packet, 1.3, EPS, run.grid)
    assert l2_distance(num, ex) <= 1e-6


def test_coherent_state_follows_ray(harmonic_model):
    grid = UniformGrid.with_spacing(-4.0, 4.0, EPS / 8)
    packet = GaussianPacket(np.array([1.0]), np.array([0.0]), np.array([[1j]]))
    x = grid.axes[0]
    for t in (0.0, 0.4, 1.1):
        f = exact_quadratic_propagate(harmonic_model, packet, t, EPS, grid)
        dens = np.abs(f.values) ** 2
        centre = np.sum(x * dens) / np.sum(dens)
        assert centre == pytest.approx(np.cos(t), abs=1e-9)
    f0 = exact_quadratic_propagate(harmonic_model, packet, 0.0, EPS, grid)
    np.testing.assert_allclose(f0.values, packet.evaluate(grid.points(), EPS), atol=1e-14)


def test_exact_quadratic_rejects_quartic(quartic_model):
    with pytest.raises(UnsupportedOrder):
        exact_quadratic_propagate(quartic_model, GaussianPacket(np.zeros(1), np.zeros(1),
                                                                np.array([[1j]])),
                                  1.0, EPS, UniformGrid((-1.0,), (1.0,), (11,)))


def test_domain_monitor(free_model):
    run = make_run(free_model, EPS, 1.0)
    packet, psi0 = _packet_field(run, Polynomial.univariate([0, 2.0]), center=0.0)
    with pytest.raises(DomainTooSmall):
        split_step(run, psi0, 1.0)


def test_caustic_formal_limit():
    assert caustic_exact(0.0, 0.01, 0.5, a=0.0) == pytest.approx(np.sqrt(2.0))


def test_caustic_focus_closed_form():
    eps = 0.01
    x = np.linspace(-0.05, 0.05, 11)
    want = np.exp(-0.25j * np.pi) / np.sqrt(eps) * np.exp(-x ** 2 / (2 * eps ** 2)) \
        * np.exp(0.5j * x ** 2 / eps)
    np.testing.assert_allclose(caustic_focus(x, eps, 0.5), want, atol=1e-12)
    np.testing.assert_allclose(gaussian_transform(x, 0.5), np.exp(-x ** 2 / 2))
    np.testing.assert_allclose(caustic_exact(x, eps, 0.0), caustic_initial(x, eps))


def test_caustic_family_and_integral():
    eps = 0.01
    grid = UniformGrid.with_spacing(-1.0, 1.0, eps / 40)
    exact, pred = exact_caustic_family(eps, 1.0, 1.0, grid)
    err2 = l2_distance(exact, pred) ** 2
    want = caustic_error_integral(eps, 1.0)
    print("focus error", err2, "integral", want)
    assert abs(err2 / want - 1) < 1e-6
    near = np.max(np.abs(caustic_exact(grid.axes[0], eps, 1 - 1e-9) - exact.values))
    assert near < 1e-4


def test_l2_examples():
    grid = UniformGrid((0.0,), (1.0,), (101,))
    one = WaveField(grid, np.ones(101, dtype=complex), 0.0, 1.0)
    zero = one.with_values(np.zeros(101))
    assert l2_distance(one, one) == 0.0
    assert l2_distance(one, zero) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    grid = UniformGrid((0.0,), (2.0,), (64,))
    f = WaveField(grid, rng.normal(size=64) + 1j * rng.normal(size=64), 0.0, 1.0)
    g = f.with_values(rng.normal(size=64) + 1j * rng.normal(size=64))
    assert l2_distance(f, g) <= l2_norm(f) + l2_norm(g) + 1e-12


def test_mass_conservation(quartic_model):
    run = make_run(quartic_model, EPS, 6.0)
    _, psi0 = _packet_field(run, Polynomial.univariate([0, 0.5, -0.3]))
    out = split_step(run, psi0, 1.0)
    print("steps", int(round(1.0 / run.dt)), "mass drift", abs(l2_norm(out) - l2_norm(psi0)))
    assert abs(l2_norm(out) - l2_norm(psi0)) < 1e-10
