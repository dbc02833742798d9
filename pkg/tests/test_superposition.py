import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasebeam.beam_core import InitialBeamData, integrate_beams
from phasebeam.errors import ConfigError, UnsupportedOrder
from phasebeam.polynomial import Polynomial
from phasebeam.reference import l2_distance, l2_norm
from phasebeam.superposition import (AmplitudeProfile, BeamSet, SuperpositionConfig, assemble,
                                     cutoff, cutoff_derivatives, default_h0, initial_beam_data,
                                     initial_wave, launch, min_imag_eig, normalization,
                                     phase_space_assemble, residual_field, resolve_cutoff,
                                     seed_grid, _imag_taylor)
from phasebeam.wavefield import UniformGrid

GAUSS = AmplitudeProfile("gaussian", 1, 2.0, 0.0)


def test_initial_beam_data_examples():
    d = initial_beam_data(Polynomial.univariate([0, 0, -0.5]), GAUSS, [1.0], 1, 1.0)
    assert d.p0[0, 0] == pytest.approx(-1.0)
    gx, gp = d.levelset_initial()
    assert -gx[0, 0, 0] / gp[0, 0, 0] == pytest.approx(-1 + 1j)
    d = initial_beam_data(Polynomial.zero(1), GAUSS, [0.37], 1, 2.0)
    assert d.p0[0, 0] == 0 and d.hess0[0, 0, 0] == 0
    d = initial_beam_data(Polynomial.univariate([0, 0, 0, 1.0]), GAUSS, [0.5], 2, 1.0)
    assert d.jets0[(3,)][0] == pytest.approx(6.0)
    assert d.hess0[0, 0, 0] == pytest.approx(3.0)


def test_cutoff_examples():
    assert cutoff(0.0, 0.4) == 1.0
    assert cutoff(0.4, 0.4) == 0.0
    v = cutoff(0.3, 0.4)
    assert 0 < v < 1
    assert cutoff(0.31, 0.4) < v
    np.testing.assert_array_equal(cutoff(np.array([0.0, 5.0]), 0.4, k=1), [1.0, 1.0])


def test_cutoff_derivatives_match_finite_differences():
    r = np.linspace(0.0, 1.2, 97)
    h = 1e-5
    rho, d1, d2 = cutoff_derivatives(r, 1.0)
    fd1 = (cutoff(r + h, 1.0) - cutoff(r - h, 1.0)) / (2 * h)
    fd2 = (cutoff(r + h, 1.0) - 2 * rho + cutoff(r - h, 1.0)) / h ** 2
    np.testing.assert_allclose(d1, fd1, atol=1e-6)
    np.testing.assert_allclose(d2, fd2, atol=1e-3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2), st.floats(0.05, 2))
def test_cutoff_monotone_in_unit_interval(r1, r2, delta):
    a, b = sorted((r1, r2))
    va, vb = cutoff(a, delta), cutoff(b, delta)
    assert 0.0 <= vb <= va <= 1.0


def test_normalization_examples():
    assert normalization(1, 0.01) == pytest.approx(3.98942, abs=1e-5)
    assert normalization(2, 0.37) == pytest.approx(1 / (2 * np.pi * 0.37))
    assert normalization(1, 1.0, 2 * np.pi) == pytest.approx(1.0)


def test_seed_grid_and_default_spacing():
    h0 = default_h0(0.01, GAUSS)
    assert h0 == pytest.approx(min(0.1, GAUSS.width / 32))
    x0, w = seed_grid(GAUSS, h0)
    assert w <= h0 and np.all(GAUSS(x0) > 1e-16)
    assert np.all(np.diff(x0[:, 0]) > 0)


def test_profile_derivatives():
    bump = AmplitudeProfile("bump", 1, 0.8, 0.1)
    x = np.linspace(-0.5, 0.7, 7)[:, None]
    h = 1e-5
    fd = (bump(x + h) - bump(x - h)) / (2 * h)
    np.testing.assert_allclose(bump.derivative(x, (1,)), fd, atol=1e-6)
    assert bump(np.array([[0.95]]))[0] == 0.0
    with pytest.raises(ConfigError):
        AmplitudeProfile("box", 1, 1.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        SuperpositionConfig(0.0)
    with pytest.raises(UnsupportedOrder):
        SuperpositionConfig(0.01, k=4)


def _single_beam(model, eps, x0=0.2, p0=0.5, T=0.6):
    init = InitialBeamData([[x0]], [[p0]], [0.1], [[[0.3]]], 1.0)
    b = integrate_beams(model, init, 1, T, 1e-3, save_times=[0.0, T])
    return BeamSet(b, np.array([0.05]))


def test_single_beam_value_on_ray(quartic_model):
    eps, T = 0.02, 0.6
    beams = _single_beam(quartic_model, eps, T=T)
    b = beams.bundle
    xc = b.x[-1, 0, 0]
    grid = UniformGrid((xc - 0.5,), (xc + 0.5,), (101,))
    f = assemble(beams, T, SuperpositionConfig(eps), grid)
    want = normalization(1, eps) * 0.05 * b.A[-1, 0] * np.exp(1j * b.S[-1, 0] / eps)
    assert abs(f.values[50] - want) < 1e-12 * abs(want)


def test_free_single_beam_residual_zero(free_model):
    eps = 0.02
    beams = _single_beam(free_model, eps)
    grid = UniformGrid((-1.0,), (2.0,), (601,))
    f = assemble(beams, 0.6, SuperpositionConfig(eps), grid)
    r = residual_field(beams, 0.6, SuperpositionConfig(eps), grid)
    assert l2_norm(r) < 1e-12 * l2_norm(f)


def test_quadratic_residual_vanishes(harmonic_model):
    eps = 0.02
    S_in = Polynomial.univariate([0, 0.4, -0.3])
    cfg = SuperpositionConfig(eps)
    beams = launch(harmonic_model, S_in, GAUSS, cfg, 1.0, save_times=[0.0, 1.0])
    grid = UniformGrid.with_spacing(-4.0, 4.0, eps / 4)
    r = residual_field(beams, 1.0, cfg, grid)
    scale = normalization(1, eps) * cfg.seed_spacing(GAUSS)
    print("max residual / (Z h0)", np.max(np.abs(r.values)) / scale)
    assert np.max(np.abs(r.values)) <= 1e-10 * scale


def test_initial_error_order_half():
    S_in = Polynomial.zero(1)
    errs = []
    for eps in (1 / 25, 1 / 100):
        cfg = SuperpositionConfig(eps)
        from phasebeam.hamiltonian import HamiltonianModel
        beams = launch(HamiltonianModel(1, S_in), S_in, GAUSS, cfg, 0.0, save_times=[0.0])
        grid = UniformGrid.with_spacing(-4.0, 4.0, eps / 4)
        errs.append(l2_distance(assemble(beams, 0.0, cfg, grid), initial_wave(S_in, GAUSS, eps, grid)))
    print("initial errors", errs)
    # bound C eps^(1/2): quartering eps must at least halve the error (up to 10%)
    assert errs[1] <= 0.55 * errs[0]


def test_cutoff_radius_keeps_imag_positive(quartic_model):
    S_in = Polynomial.univariate([0, 0.3, -0.4, 0.2])
    cfg = SuperpositionConfig(0.02, k=3)
    beams = launch(quartic_model, S_in, GAUSS, cfg, 1.0, save_times=np.linspace(0, 1, 5))
    b = beams.bundle
    assert np.all(beams.delta > 0) and np.all(beams.delta <= 1.0)
    unit = np.linspace(-1, 1, 41)[:, None]
    for ti in range(b.times.size):
        z = beams.delta[:, None, None] * unit[None]
        im = _imag_taylor(b, ti, z)
        lam = min_imag_eig(b, ti)
        assert np.all(im >= 0.25 * lam[:, None] * z[..., 0] ** 2 - 1e-14)
    np.testing.assert_array_equal(resolve_cutoff(b, 1.0), beams.delta)


def test_phase_space_superposition(harmonic_model, quartic_model):
    eps = 0.05
    S_in = Polynomial.univariate([0, 0.2, -0.1])
    cfg = SuperpositionConfig(eps)
    grid = UniformGrid.with_spacing(-3.0, 3.0, eps / 4)
    box = ((-0.5, 0.5), (-0.5, 0.5))
    f = phase_space_assemble(harmonic_model, S_in, box, (8, 8), 1.0, cfg, grid, A_in=GAUSS)
    r = phase_space_assemble(harmonic_model, S_in, box, (8, 8), 1.0, cfg, grid, A_in=GAUSS,
                             residual=True)
    assert l2_norm(r) <= 1e-10 * l2_norm(f)
    # one cell: a single beam at the cell centre times Z and the cell area
    one = phase_space_assemble(quartic_model, S_in, ((0.1, 0.3), (0.2, 0.6)), (1, 1), 0.5, cfg,
                               grid)
    init = InitialBeamData([[0.2]], [[0.4]], [S_in(0.2)], [[[0.0]]], 1.0)
    b = integrate_beams(quartic_model, init, 1, 0.5, 1e-3, save_times=[0.5])
    single = assemble(BeamSet(b, np.array([0.08])), 0.5, cfg, grid)
    np.testing.assert_allclose(one.values, single.values, atol=1e-13)
