import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasebeam.errors import DimensionMismatch
from phasebeam.flow import PhasePoint, flow_jacobian, flow_map, integrate_rays, time_grid


def test_free_particle_ray(free_model):
    tr = flow_map(free_model, PhasePoint([0.0], [1.0]), 1.0)
    np.testing.assert_array_equal(tr.X[0], [0.0, 1.0])
    np.testing.assert_allclose(tr.X[-1], [1.0, 1.0], atol=1e-14)


def test_harmonic_quarter_turn(harmonic_model):
    tr = flow_map(harmonic_model, PhasePoint([1.0], [0.0]), np.pi / 2)
    np.testing.assert_allclose(tr.X[-1], [0.0, -1.0], atol=1e-8)


def test_quartic_richardson(quartic_model):
    dt = 1e-2
    X1 = flow_map(quartic_model, PhasePoint([1.0], [0.0]), 1.0, dt).X[-1]
    X2 = flow_map(quartic_model, PhasePoint([1.0], [0.0]), 1.0, dt / 2).X[-1]
    diff = np.max(np.abs(X1 - X2))
    print("quartic RK4 self-consistency", diff)
    assert diff <= 16 * dt ** 4


def test_jacobian_examples(free_model, harmonic_model, quartic_model):
    np.testing.assert_allclose(flow_jacobian(free_model, PhasePoint([0.0], [1.0]), 1.0)[-1],
                               [[1, 1], [0, 1]], atol=1e-13)
    np.testing.assert_allclose(flow_jacobian(harmonic_model, PhasePoint([0.3], [0.1]), np.pi / 2)[-1],
                               [[0, 1], [-1, 0]], atol=1e-8)
    J = flow_jacobian(quartic_model, PhasePoint([1.0], [0.0]), 1.0)
    assert abs(np.linalg.det(J[-1]) - 1) < 1e-8


def test_time_grid_covers_T():
    t, h = time_grid(1.0, 0.3)
    assert t[-1] == pytest.approx(1.0)
    assert h <= 0.3
    t, h = time_grid(0.0, 0.1)
    assert t.size == 1


def test_bad_inputs(free_model):
    with pytest.raises(DimensionMismatch):
        PhasePoint([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        PhasePoint([np.inf], [1.0])
    with pytest.raises(ValueError):
        time_grid(1.0, 0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_volume_preservation(quartic_model, x0, p0):
    _, X, J = integrate_rays(quartic_model, np.array([[x0, p0]]), 1.0, 1e-2, with_jacobian=True)
    dets = np.linalg.det(J[:, 0])
    assert np.max(np.abs(dets - 1)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_backward_tracing_inverts(quartic_model, x0, p0):
    X0 = np.array([[x0, p0]])
    _, X1, _ = integrate_rays(quartic_model, X0, 0.7, 1e-3, keep="last")
    _, Xb, _ = integrate_rays(quartic_model, X1, -0.7, 1e-3, keep="last")
    np.testing.assert_allclose(Xb, X0, atol=1e-9)


def test_energy_conservation(quartic_model):
    X0 = np.array([[0.7, -0.4], [1.2, 0.3]])
    errs = []
    for dt in (2e-2, 1e-2):
        _, X, _ = integrate_rays(quartic_model, X0, 2.0, dt)
        errs.append(np.max(np.abs(quartic_model.H(X) - quartic_model.H(X0))))
    print("energy drift", errs)
    assert errs[0] < 1e-5 and errs[0] / errs[1] > 12
