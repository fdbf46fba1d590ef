import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from charfol.symplectic import (apply_J, fd_gradient, hamiltonian_vector_field, omega,
                                omega_matrix, symplecticity_defect)

vec4 = arrays(np.float64, 4, elements=st.floats(-10, 10))


def test_omega_normalization():
    assert omega([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert omega([0.0, 1.0], [1.0, 0.0]) == -1.0


def test_omega_hand_value():
    # (1*6 - 2*5) + (3*8 - 4*7)
    assert omega([1, 2, 3, 4], [5, 6, 7, 8]) == -8.0


def test_omega_matches_matrix_form(rng):
    U, V = rng.normal(size=(2, 50, 6))
    Om = omega_matrix(3)
    np.testing.assert_allclose(omega(U, V), np.einsum("ki,ij,kj->k", U, Om, V), atol=1e-12)


@given(vec4, vec4)
def test_omega_antisymmetric(u, v):
    assert omega(u, v) + omega(v, u) == pytest.approx(0.0, abs=1e-9)
    assert omega(u, u) == 0.0


@given(vec4, vec4)
@settings(max_examples=50)
def test_J_compatibility(u, v):
    assert omega(apply_J(u), apply_J(v)) == pytest.approx(omega(u, v), abs=1e-9)
    assert np.dot(apply_J(u), v) == pytest.approx(omega(u, v), abs=1e-9)


def test_J_squares_to_minus_identity(rng):
    v = rng.normal(size=(10, 4))
    np.testing.assert_array_equal(apply_J(apply_J(v)), -v)
    np.testing.assert_array_equal(apply_J([1.0, 0, 0, 0]), [0.0, 1.0, 0, 0])


def test_nondegenerate_on_samples(rng):
    for u in rng.normal(size=(20, 4)):
        assert np.max(np.abs(omega(u, np.eye(4)))) > 0


def test_linear_hamiltonian():
    X = hamiltonian_vector_field([1.0, 0.0])  # H = x1
    np.testing.assert_array_equal(X, [0.0, -1.0])
    for v, dH in (([1.0, 0.0], 1.0), ([0.0, 1.0], 0.0)):
        assert omega(X, v) == dH


def test_quadratic_hamiltonian_is_minus_Jp(rng):
    p = rng.normal(size=4)
    np.testing.assert_array_equal(hamiltonian_vector_field(p, p), -apply_J(p))


def test_hamiltonian_identity(rng):
    G, V = rng.normal(size=(2, 100, 6))
    np.testing.assert_allclose(omega(hamiltonian_vector_field(G), V), np.sum(G * V, axis=1),
                               atol=1e-12)


def test_identity_chain(rng):
    g = rng.normal(size=4)
    N = rng.normal(size=4)
    N /= np.linalg.norm(N)
    X = hamiltonian_vector_field(g)
    JN = apply_J(N)
    assert np.dot(X, N) - omega(X, JN) == pytest.approx(0.0, abs=1e-14)
    assert omega(X, JN) - np.dot(g, JN) == pytest.approx(0.0, abs=1e-14)


def test_symplecticity_defect_examples():
    assert symplecticity_defect(np.eye(4)) == 0.0
    assert symplecticity_defect(np.diag([2.0, 0.5, 2.0, 0.5])) == 0.0
    assert symplecticity_defect(2 * np.eye(2)) == pytest.approx(3.0)


def test_symplecticity_defect_rejects_bad_shapes():
    with pytest.raises(ValueError):
        symplecticity_defect(np.eye(3))
    with pytest.raises(ValueError):
        symplecticity_defect(np.ones((2, 4)))


def test_fd_gradient(rng):
    H = lambda p: np.sum(p ** 3, axis=-1)
    p = rng.normal(size=4)
    np.testing.assert_allclose(fd_gradient(H, p), 3 * p ** 2, atol=1e-8)


def test_rejects_odd_or_nonfinite():
    with pytest.raises(ValueError):
        omega([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        apply_J([np.nan, 0.0])
    with pytest.raises(ValueError):
        omega([1.0, 0.0], [1.0, 0.0, 0.0, 0.0])
