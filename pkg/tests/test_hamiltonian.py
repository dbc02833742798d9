import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasebeam.errors import DerivativeOrderError, DimensionMismatch
from phasebeam.hamiltonian import HamiltonianModel, evaluate, potential_derivative
from phasebeam.multiindex import mbinom, mfactorial, monomials, multi_indices, multi_indices_upto
from phasebeam.polynomial import Polynomial


def test_evaluate_examples(free_model, harmonic_model, quartic_model):
    assert evaluate(free_model, [0.0, 1.0]) == pytest.approx(0.5)
    assert evaluate(harmonic_model, [1.0, 0.0]) == pytest.approx(0.5)
    assert evaluate(quartic_model, [2.0, 1.0]) == pytest.approx(4.5)


def test_evaluate_rejects_nonfinite(free_model):
    with pytest.raises(ValueError):
        evaluate(free_model, [np.nan, 0.0])
    with pytest.raises(DimensionMismatch):
        evaluate(free_model, [0.0, 1.0, 2.0])


def test_potential_derivative_examples(harmonic_model, quartic_model):
    assert potential_derivative(quartic_model, (2,)) == Polynomial.univariate([0, 0, 3.0])
    assert potential_derivative(harmonic_model, (3,)).is_zero()
    m2 = HamiltonianModel(2, Polynomial(2, {(2, 1): 1.0}))
    assert potential_derivative(m2, (1, 1)) == Polynomial(2, {(1, 0): 2.0})


def test_derivative_order_limits(quartic_model):
    with pytest.raises(DerivativeOrderError):
        potential_derivative(quartic_model, (9,))
    with pytest.raises(DimensionMismatch):
        potential_derivative(quartic_model, (1, 1))
    with pytest.raises(DimensionMismatch):
        HamiltonianModel(3, Polynomial.zero(3))


def test_kinetic_blocks():
    m = HamiltonianModel(2, Polynomial(2, {(2, 0): 0.5, (1, 2): 0.3}))
    X = np.array([[0.3, -0.2, 1.0, 2.0]])
    np.testing.assert_array_equal(m.H_p(X), X[:, 2:])
    np.testing.assert_array_equal(m.H_pp(X)[0], np.eye(2))
    np.testing.assert_array_equal(m.H_xp(X)[0], np.zeros((2, 2)))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=6), st.floats(-1.5, 1.5))
def test_derivatives_match_finite_differences(coeffs, x):
    m = HamiltonianModel(1, Polynomial.univariate(coeffs))
    h = 1e-4
    for r in (1, 2, 3):
        lo = m.dV(x - h, (r - 1,))
        hi = m.dV(x + h, (r - 1,))
        fd = (hi - lo) / (2 * h)
        np.testing.assert_allclose(m.dV(x, (r,)), fd, rtol=1e-5, atol=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_hamiltonian_real_and_hessian_symmetric(x1, x2, p1, p2):
    m = HamiltonianModel(2, Polynomial(2, {(2, 0): 0.5, (1, 2): 0.3, (0, 4): 0.1}))
    X = np.array([x1, x2, p1, p2])
    assert np.isrealobj(m.H(X))
    Hxx = m.H_xx(X)
    np.testing.assert_array_equal(Hxx, Hxx.T)


def test_polynomial_config_roundtrip():
    p = Polynomial(2, {(2, 0): 0.5, (1, 1): -0.25})
    q = Polynomial.from_config(2, p.to_config())
    assert p == q
    assert p.degree == 2
    assert (p - q).is_zero()


def test_multiindex_helpers():
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert len(multi_indices_upto(2, 3)) == 10
    assert mfactorial((2, 3)) == 12
    assert mbinom((3, 2), (1, 1)) == 6
    z = np.array([[0.5, 2.0]])
    mono = monomials(z, 3)
    np.testing.assert_allclose(mono[(1, 2)], 0.5 * 4.0 / 2)
