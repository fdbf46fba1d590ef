"""Hamiltonian flows and characteristic leaves.

Flows are integrated with the implicit midpoint rule (symplectic, second
order); the classical explicit RK4 scheme is available as a cross-check via
``method="rk4"``. All integrators work on a batch of points at once, which
is how the hammer and displacement verifiers push thousands of samples.

Leaves are traced in arclength by integrating the unit field ``J N`` with
RK4 and projecting back onto the level set after each step.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from ._validation import as_phase, as_point_cloud, check_positive
from .hypersurface import project_to_surface
from .symplectic import apply_J, fd_gradient, hamiltonian_vector_field, omega


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HamiltonianSystem:
    H: Callable
    gradH: Optional[Callable] = None
    label: str = "H"

    def energy(self, p):
        return self.H(as_phase(p))

    def gradient(self, p):
        if self.gradH is None:
            return fd_gradient(self.H, p)
        return self.gradH(p)

    def vector_field(self, p):
        return hamiltonian_vector_field(self.gradient(p))

    def gradient_consistency(self, points, h=1e-6):
        """Worst relative error between ``gradH`` and central differences of ``H``."""
        P = as_point_cloud(points)
        exact = self.gradient(P)
        approx = fd_gradient(self.H, P, h)
        scale = np.maximum(np.linalg.norm(exact, axis=-1), 1e-12)
        return float(np.max(np.linalg.norm(exact - approx, axis=-1) / scale))


def harmonic_oscillator():
    """``H = |z|^2 / 2``; its flow rotates every ``z_i`` clockwise at unit speed."""
    return HamiltonianSystem(lambda p: 0.5 * np.sum(p * p, axis=-1), lambda p: np.array(p, dtype=float),
                             "harmonic")


def quartic_rotation():
    """``H = |z|^4 / 4``: rotation with speed ``|z|^2``, a nonlinear symplectic map."""
    return HamiltonianSystem(lambda p: 0.25 * np.sum(p * p, axis=-1) ** 2,
                             lambda p: np.sum(p * p, axis=-1)[..., None] * p, "quartic")


def anharmonic_oscillator():
    """``H = |z|^2 / 2 + x1^4 / 4``, a non-quadratic benchmark for energy drift."""

    def H(p):
        return 0.5 * np.sum(p * p, axis=-1) + 0.25 * p[..., 0] ** 4

    def gradH(p):
        g = np.array(p, dtype=float)
        g[..., 0] += p[..., 0] ** 3
        return g

    return HamiltonianSystem(H, gradH, "anharmonic")


SYSTEMS = {
    "harmonic": harmonic_oscillator,
    "quartic": quartic_rotation,
    "anharmonic": anharmonic_oscillator,
}


def system_from_name(name):
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise KeyError(f"unknown Hamiltonian system {name!r}; known: {sorted(SYSTEMS)}") from None


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    energy: np.ndarray

    @property
    def endpoint(self):
        return self.points[-1]

    @property
    def energy_drift(self):
        return float(np.max(np.abs(self.energy - self.energy[0])))


def midpoint_step(field, P, dt, tol=1e-12, max_iter=25):
    """One implicit midpoint step, solved by fixed-point iteration.

    Points of a batch are iterated until their own increment drops below
    ``tol * (1 + max|P|)``; converged points leave the active set.
    """
    P = np.asarray(P, dtype=float)
    flat = P.reshape(-1, P.shape[-1])
    Q = flat + dt * field(flat)
    limit = tol * (1.0 + np.max(np.abs(flat), initial=0.0))
    active = np.arange(len(flat))
    delta = np.inf
    for _ in range(max_iter):
        Pa = flat[active]
        Qa = Pa + dt * field(0.5 * (Pa + Q[active]))
        inc = np.max(np.abs(Qa - Q[active]), axis=1)
        Q[active] = Qa
        delta = float(np.max(inc, initial=0.0))
        if not np.isfinite(delta):
            raise IntegrationError("non-finite state in implicit midpoint step")
        active = active[inc > limit]
        if active.size == 0:
            return Q.reshape(P.shape)
    raise IntegrationError(
        f"implicit midpoint fixed-point iteration did not converge in {max_iter} iterations "
        f"(last increment {delta:.3e}, dt={dt:g})")


def rk4_step(field, P, dt):
    k1 = field(P)
    k2 = field(P + 0.5 * dt * k1)
    k3 = field(P + 0.5 * dt * k2)
    k4 = field(P + dt * k3)
    return P + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_fn(method):
    if method == "midpoint":
        return midpoint_step
    if method == "rk4":
        return rk4_step
    raise ValueError(f"unknown integration method {method!r}")


def _n_steps(T, dt):
    return max(1, int(np.ceil(T / dt - 1e-9)))


def propagate(field, P, T, dt, method="midpoint"):
    """Endpoint of the flow of ``field`` after time ``T`` (negative ``T`` flows backward)."""
    P = np.array(P, dtype=float)
    if T == 0:
        return P
    check_positive(dt, "dt")
    n = _n_steps(abs(T), dt)
    h = T / n
    step = _step_fn(method)
    for _ in range(n):
        P = step(field, P, h)
    if not np.all(np.isfinite(P)):
        raise IntegrationError("non-finite state")
    return P


def sample_flow(field, P, times, dt, method="midpoint", on_sample=None):
    """Flow a batch and record it at increasing ``times`` (starting from 0).

    Returns an array of shape ``(len(times), *P.shape)``. ``on_sample(k, t, Q)``
    is called after each sample; returning ``True`` stops early, in which case
    the output is truncated to the samples reached.
    """
    P = np.array(P, dtype=float)
    out = []
    t_prev = 0.0
    step = _step_fn(method)
    for k, t in enumerate(times):
        span = t - t_prev
        if span < 0:
            raise ValueError("sample times must be nondecreasing and start at or after 0")
        if span > 0:
            n = _n_steps(span, dt)
            for _ in range(n):
                P = step(field, P, span / n)
        if not np.all(np.isfinite(P)):
            raise IntegrationError("non-finite state")
        out.append(P.copy())
        t_prev = t
        if on_sample is not None and on_sample(k, t, P):
            break
    return np.array(out)


def integrate(sys, p0, T, dt, method="midpoint"):
    """Integrate ``sys`` from ``p0`` for time ``T`` with step at most ``dt``.

    The step is shrunk to ``T / ceil(T / dt)`` so the endpoint lands on ``T``.
    """
    p0 = as_phase(p0, "p0")
    if T < 0:
        raise ValueError("T must be nonnegative")
    check_positive(dt, "dt")
    if T == 0:
        pts = p0[None, :].copy()
        return Trajectory(np.zeros(1), pts, np.atleast_1d(sys.energy(pts)))
    n = _n_steps(T, dt)
    h = T / n
    step = _step_fn(method)
    pts = np.empty((n + 1,) + p0.shape)
    pts[0] = p0
    for k in range(n):
        pts[k + 1] = step(sys.vector_field, pts[k], h)
        if not np.all(np.isfinite(pts[k + 1])):
            raise IntegrationError(f"non-finite state at step {k + 1}")
    times = np.linspace(0.0, T, n + 1)
    return Trajectory(times, pts, sys.energy(pts))


def flow_map(sys, P, T, dt, method="midpoint"):
    return propagate(sys.vector_field, P, T, dt, method)


def flow_jacobian(sys, p0, T, dt, h=1e-5, method="midpoint"):
    """Central finite-difference Jacobian of the time-``T`` flow map at ``p0``.

    All ``2 * 2n`` perturbed starts are integrated as one batch so they share
    the fixed-point iteration counts, keeping the difference quotients smooth.
    """
    p0 = as_phase(p0, "p0")
    dim = p0.shape[-1]
    E = h * np.eye(dim)
    starts = np.concatenate([p0 + E, p0 - E])
    ends = flow_map(sys, starts, T, dt, method)
    return ((ends[:dim] - ends[dim:]) / (2 * h)).T


# --------------------------------------------------------------------------
# characteristic leaves


@dataclass(frozen=True)
class LeafTrace:
    surface: str
    arclength: np.ndarray
    points: np.ndarray
    tangents: Optional[np.ndarray]
    closed: bool
    action: Optional[float] = None

    @property
    def length(self):
        return float(self.arclength[-1])


def _unit_jn(S, P):
    g = S.gradient(P)
    return apply_J(g / np.linalg.norm(g, axis=-1, keepdims=True))


def _segment_distance(y, a, b):
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.clip(np.sum((y - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    return np.linalg.norm(a + t[..., None] * ab - y, axis=-1)


def trace_leaf(S, p0, max_length=20.0, dt=1e-2, direction=1, closure_tol=1e-6,
               align_cos=0.99):
    """Trace the characteristic leaf of ``S`` through ``p0``.

    The trace stops early when it comes back to ``p0``: the step that
    crosses the hyperplane through ``p0`` orthogonal to the initial direction
    is shortened so it lands on that hyperplane, and the leaf is declared
    closed if that point is within ``closure_tol`` of ``p0`` with tangent
    cosine above ``align_cos``. Closed traces carry their action.
    """
    p0 = as_phase(p0, "p0")
    S._require_on(p0)
    check_positive(dt, "dt")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")

    def field(P):
        return direction * _unit_jn(S, P)

    v0 = field(p0)
    pts, tans, s = [p0.copy()], [v0], [0.0]
    max_dist = 0.0
    closed = False
    p = p0
    while s[-1] < max_length - 1e-12:
        h = min(dt, max_length - s[-1])
        q = project_to_surface(S, rk4_step(field, p, h))
        a_prev = float(np.dot(p - p0, v0))
        a_new = float(np.dot(q - p0, v0))
        dist = float(np.linalg.norm(q - p0))
        if (max_dist > 10 * dt and a_prev < 0.0 <= a_new and dist < 2 * dt):
            hs = h * (-a_prev) / (a_new - a_prev)
            for _ in range(4):
                qs = project_to_surface(S, rk4_step(field, p, hs))
                a_s = float(np.dot(qs - p0, v0))
                speed = float(np.dot(field(qs), v0))
                if speed <= 0:
                    break
                hs -= a_s / speed
            qs = project_to_surface(S, rk4_step(field, p, hs))
            vs = field(qs)
            if np.linalg.norm(qs - p0) < closure_tol and float(np.dot(vs, v0)) > align_cos:
                pts.append(qs)
                tans.append(vs)
                s.append(s[-1] + hs)
                closed = True
                break
        max_dist = max(max_dist, dist)
        pts.append(q)
        tans.append(field(q))
        s.append(s[-1] + h)
        p = q

    trace = LeafTrace(S.name, np.array(s), np.array(pts), np.array(tans), closed)
    if closed:
        trace = LeafTrace(trace.surface, trace.arclength, trace.points, trace.tangents, True,
                          leaf_action(trace))
    return trace


def leaf_action(trace):
    """Absolute integral of ``lambda1 = (1/2) sum(x dy - y dx)`` around a closed leaf.

    Uses the trapezoidal rule on the recorded unit tangents when present and
    the exact chord-polygon integral otherwise.
    """
    if not trace.closed:
        raise ValueError("leaf_action needs a closed trace")
    P = trace.points
    if trace.tangents is not None:
        integrand = 0.5 * omega(P, trace.tangents)
        return float(abs(trapezoid(integrand, trace.arclength)))
    return float(abs(0.5 * np.sum(omega(P[:-1], P[1:]))))


def same_leaf(S, x, y, max_length=10.0, tol_hit=1e-4, dt=1e-2):
    """Whether tracing from ``x`` (either orientation) passes within ``tol_hit`` of ``y``."""
    x = as_phase(x, "x")
    y = as_phase(y, "y")
    S._require_on(x)
    S._require_on(y)
    if np.linalg.norm(x - y) <= tol_hit:
        return True
    for direction in (1, -1):
        tr = trace_leaf(S, x, max_length, dt, direction)
        d = _segment_distance(y, tr.points[:-1], tr.points[1:])
        if np.min(d) <= tol_hit:
            return True
        if tr.closed:
            return False
    return False
