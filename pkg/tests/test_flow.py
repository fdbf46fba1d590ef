import numpy as np
import pytest

from charfol.flow import (HamiltonianSystem, _segment_distance, IntegrationError, flow_jacobian, flow_map,
                          harmonic_oscillator, integrate, leaf_action, midpoint_step,
                          propagate, same_leaf, system_from_name, trace_leaf)
from charfol.hypersurface import cylinder, ellipsoid12, hyperplane, sphere
from charfol.symplectic import symplecticity_defect


def cayley_endpoint(T, dt):
    """Implicit midpoint on x' = y, y' = -x is rotation by 2 arctan(h/2) per step."""
    n = int(np.ceil(T / dt - 1e-9))
    angle = n * 2 * np.arctan(T / n / 2)
    return np.array([np.cos(angle), -np.sin(angle)])


def test_midpoint_matches_discrete_oracle():
    tr = integrate(harmonic_oscillator(), [1.0, 0.0], 2 * np.pi, 1e-3)
    np.testing.assert_allclose(tr.endpoint, cayley_endpoint(2 * np.pi, 1e-3), atol=1e-12)
    # the scheme's own phase error at this step is about 5e-7
    assert 1e-7 < np.linalg.norm(tr.endpoint - [1.0, 0.0]) < 1e-6


def test_rk4_reaches_closed_form():
    tr = integrate(harmonic_oscillator(), [1.0, 0.0], 2 * np.pi, 1e-3, method="rk4")
    assert np.linalg.norm(tr.endpoint - [1.0, 0.0]) < 1e-8


def test_zero_time_and_constant_hamiltonian():
    tr = integrate(harmonic_oscillator(), [1.0, 2.0], 0.0, 1e-2)
    assert tr.points.shape == (1, 2)
    const = HamiltonianSystem(lambda p: np.zeros(p.shape[:-1]), lambda p: np.zeros_like(p), "const")
    np.testing.assert_array_equal(integrate(const, [0.3, -0.7], 1.0, 1e-2).endpoint, [0.3, -0.7])


def test_step_count_lands_on_T():
    tr = integrate(harmonic_oscillator(), [1.0, 0.0], 0.25, 0.1)
    assert tr.times[-1] == 0.25
    assert len(tr.times) == 4


def test_norm_conserved_for_rotation(rng):
    p0 = rng.normal(size=4)
    tr = integrate(harmonic_oscillator(), p0, 3.0, 1e-2)
    np.testing.assert_allclose(np.linalg.norm(tr.points, axis=1), np.linalg.norm(p0), rtol=1e-13)


def test_energy_drift_second_order_on_anharmonic():
    sys = system_from_name("anharmonic")
    p0 = np.array([1.0, 0.3, 0.5, -0.2])
    drifts = [integrate(sys, p0, 1.0, dt).energy_drift for dt in (1e-2, 5e-3, 2.5e-3)]
    assert drifts[0] / drifts[1] >= 3.5
    assert drifts[1] / drifts[2] >= 3.5


@pytest.mark.parametrize("name", ["harmonic", "quartic", "anharmonic"])
def test_flow_symplectic(name, rng):
    sys = system_from_name(name)
    p0 = rng.normal(size=4) * 0.7
    assert symplecticity_defect(flow_jacobian(sys, p0, 1.0, 1e-3)) < 1e-6


@pytest.mark.parametrize("name", ["harmonic", "quartic", "anharmonic"])
def test_catalog_gradients(name, rng):
    assert system_from_name(name).gradient_consistency(rng.normal(size=(10, 4))) < 1e-6


def test_jacobian_of_linear_flow():
    J = flow_jacobian(harmonic_oscillator(), np.array([0.4, -0.1]), np.pi / 2, 1e-3)
    np.testing.assert_allclose(J, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-6)
    np.testing.assert_allclose(flow_jacobian(harmonic_oscillator(), np.ones(4), 0.0, 1e-3),
                               np.eye(4), atol=1e-10)


def test_backward_flow_inverts(rng):
    sys = system_from_name("anharmonic")
    P = rng.normal(size=(5, 4))
    back = flow_map(sys, flow_map(sys, P, 0.7, 1e-2), -0.7, 1e-2)
    np.testing.assert_allclose(back, P, atol=1e-11)


def test_divergent_fixed_point_raises():
    with pytest.raises(IntegrationError), np.errstate(over="ignore", invalid="ignore"):
        midpoint_step(lambda P: 50.0 * P ** 3, np.array([[10.0, 10.0]]), 1.0)


def test_unknown_system():
    with pytest.raises(KeyError):
        system_from_name("pendulum")


def test_unit_circle_leaf():
    tr = trace_leaf(sphere(1), [1.0, 0, 0, 0])
    assert tr.closed
    assert tr.length == pytest.approx(2 * np.pi, abs=1e-8)
    t = tr.arclength
    np.testing.assert_allclose(tr.points, np.stack([np.cos(t), np.sin(t), 0 * t, 0 * t], 1), atol=1e-8)
    assert leaf_action(tr) == pytest.approx(np.pi, abs=1e-8)


@pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
def test_circle_action_scales(r):
    tr = trace_leaf(sphere(r), [0, 0, r, 0], max_length=8 * r)
    assert leaf_action(tr) == pytest.approx(np.pi * r * r, abs=1e-8 * max(1, r * r))


def test_hyperplane_leaf_is_open_line():
    tr = trace_leaf(hyperplane(), np.zeros(4), max_length=2.0)
    assert not tr.closed
    np.testing.assert_allclose(tr.points[:, 1:], 0.0, atol=1e-15)
    assert tr.points[-1, 0] == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        leaf_action(tr)


def test_ellipsoid_least_action_leaves():
    c0 = trace_leaf(ellipsoid12(), [1.0, 0, 0, 0])
    assert c0.closed and c0.length == pytest.approx(2 * np.pi, abs=1e-8)
    assert leaf_action(c0) == pytest.approx(np.pi, abs=1e-6)
    c1 = trace_leaf(ellipsoid12(), [0, 0, 2.0, 0], max_length=30)
    assert c1.closed and leaf_action(c1) == pytest.approx(4 * np.pi, abs=1e-6)


def test_cylinder_characteristic_circle():
    tr = trace_leaf(cylinder(), [0.0, 1.0, 0.3, -0.4])
    assert tr.closed
    np.testing.assert_allclose(tr.points[:, 2:], [[0.3, -0.4]] * len(tr.points), atol=1e-12)


def test_reversal_returns_to_start():
    S = ellipsoid12()
    p0 = np.array([0.6, 0.0, 1.6, 0.0])
    fwd = trace_leaf(S, p0, max_length=1.5)
    back = trace_leaf(S, fwd.points[-1], max_length=1.5, direction=-1)
    assert np.linalg.norm(back.points[-1] - p0) < 1e-6


def test_nearby_starts_give_same_leaf():
    S = ellipsoid12()
    p0 = np.array([0.6, 0.0, 1.6, 0.0])
    reference = trace_leaf(S, p0, max_length=3.0, dt=1e-3)
    start = trace_leaf(S, p0, max_length=0.25, dt=5e-3).points[-1]
    b = trace_leaf(S, start, max_length=2.0)
    a0, a1 = reference.points[:-1], reference.points[1:]
    hausdorff = max(np.min(_segment_distance(q, a0, a1)) for q in b.points)
    assert hausdorff < 1e-5


def test_same_leaf_examples():
    H = hyperplane()
    assert same_leaf(H, np.zeros(4), [0.5, 0, 0, 0])
    assert same_leaf(H, [0.5, 0, 0, 0], np.zeros(4))
    assert not same_leaf(H, np.zeros(4), [0, 0, 1, 0])
    assert same_leaf(H, [0.2, 0, 1, 3], [0.2, 0, 1, 3])
    S = sphere(1)
    assert same_leaf(S, [1.0, 0, 0, 0], [0, -1.0, 0, 0])
    assert not same_leaf(S, [1.0, 0, 0, 0], [0, 0, 1.0, 0])


def test_trace_validation():
    with pytest.raises(ValueError):
        trace_leaf(sphere(1), [2.0, 0, 0, 0])
    with pytest.raises(ValueError):
        trace_leaf(sphere(1), [1.0, 0, 0, 0], direction=0)


def test_propagate_negative_time_is_backward(rng):
    field = harmonic_oscillator().vector_field
    P = rng.normal(size=(3, 2))
    np.testing.assert_allclose(propagate(field, propagate(field, P, 1.3, 1e-2), -1.3, 1e-2), P,
                               atol=1e-12)
