"""Hopf fibration of the round 3-sphere by its characteristic circles.

A point of ``S^3(r)`` is identified with ``(z1, z2)``, ``z_k = x_k + i y_k``;
``J`` is multiplication by ``i``, so the characteristic flow is
``z -> e^{it} z`` and the fibers are the orbits of the diagonal circle
action. The base ``P^1`` is realized as the unit 2-sphere through

    q = (2 Re(conj(z1) z2), 2 Im(conj(z1) z2), |z1|^2 - |z2|^2) / |z|^2

with area form ``omega0 = det(q, a, b) / 4``, which is the round form of the
radius-1/2 sphere and has total area ``pi``. With these choices
``omega|S^3 = pi^* omega0`` holds exactly on the unit sphere.
"""

import numpy as np

from ._validation import as_phase, check_positive
from .flow import leaf_action, trace_leaf
from .hypersurface import OffSurfaceError, sphere
from .symplectic import omega

BASE_AREA_SCALE = 0.25


def _require_4d(p):
    if p.shape[-1] != 4:
        raise ValueError(f"the Hopf fibration is defined on C^2, got dimension {p.shape[-1]}")


def hopf_projection(p):
    """Unit 3-vector of the base point ``[z1 : z2]``; works on any sphere about 0."""
    p = as_phase(p)
    _require_4d(p)
    r2 = np.sum(p * p, axis=-1)
    if np.any(r2 == 0):
        raise OffSurfaceError("the origin lies on no sphere and has no Hopf image")
    x1, y1, x2, y2 = np.moveaxis(p, -1, 0)
    re = x1 * x2 + y1 * y2
    im = x1 * y2 - y1 * x2
    q = np.stack([2 * re, 2 * im, x1 ** 2 + y1 ** 2 - x2 ** 2 - y2 ** 2], axis=-1)
    return q / r2[..., None]


def omega0(q, a, b):
    """Area form of the base at the unit vector ``q``, scaled to total area ``pi``."""
    q, a, b = (np.asarray(v, dtype=float) for v in (q, a, b))
    return BASE_AREA_SCALE * np.sum(q * np.cross(a, b), axis=-1)


def projection_differential(p, u, h=1e-5):
    """``d pi_p(u)`` by central differences with step ``h`` along ``u``."""
    p, u = as_phase(p), as_phase(u, "u")
    return (hopf_projection(p + h * u) - hopf_projection(p - h * u)) / (2 * h)


def tangent_part(p, u):
    """Component of ``u`` tangent to the sphere through ``p``."""
    p, u = as_phase(p), as_phase(u, "u")
    unit = p / np.linalg.norm(p, axis=-1, keepdims=True)
    return u - np.sum(u * unit, axis=-1, keepdims=True) * unit


def pullback_defect(p, u, v, h=1e-5):
    """``|omega(u, v) - r^2 * omega0(d pi(u), d pi(v))|`` at ``p`` on ``S^3(r)``.

    ``u`` and ``v`` are first projected onto the tangent space of the sphere.
    The factor ``r^2 = |p|^2`` accounts for ``pi`` being constant along rays.
    """
    p = as_phase(p)
    _require_4d(p)
    u, v = tangent_part(p, u), tangent_part(p, v)
    q = hopf_projection(p)
    du = projection_differential(p, u, h)
    dv = projection_differential(p, v, h)
    r2 = np.sum(p * p, axis=-1)
    return np.abs(omega(u, v) - r2 * omega0(q, du, dv))


def total_base_area(grid=256, theta_range=(0.0, np.pi)):
    """Integrate ``omega0`` over the base with the midpoint rule in polar coordinates.

    ``theta_range`` restricts the polar angle, so ``(0, pi/2)`` gives the
    upper hemisphere.
    """
    grid = int(grid)
    if grid < 1:
        raise ValueError("grid must be a positive integer")
    t0, t1 = map(float, theta_range)
    if not 0.0 <= t0 < t1 <= np.pi:
        raise ValueError(f"theta_range must satisfy 0 <= t0 < t1 <= pi, got {theta_range}")
    ht, hp = (t1 - t0) / grid, 2 * np.pi / (2 * grid)
    theta = t0 + (np.arange(grid) + 0.5) * ht
    phi = (np.arange(2 * grid) + 0.5) * hp
    T, P = np.meshgrid(theta, phi, indexing="ij")
    st, ct, sp, cp = np.sin(T), np.cos(T), np.sin(P), np.cos(P)
    q = np.stack([st * cp, st * sp, ct], axis=-1)
    dq_dt = np.stack([ct * cp, ct * sp, -st], axis=-1)
    dq_dp = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
    return float(np.sum(omega0(q, dq_dt, dq_dp)) * ht * hp)


def fiber_through(p, dt=1e-2):
    """Closed characteristic trace of the sphere through ``p``."""
    p = as_phase(p)
    _require_4d(p)
    r = float(np.linalg.norm(p))
    trace = trace_leaf(sphere(r), p, max_length=2 * np.pi * r * 1.1, dt=dt)
    if not trace.closed:
        raise RuntimeError(f"leaf through {p} did not close")
    return trace


def fiber_invariance(p, dt=1e-2):
    """Largest deviation of the projection along the traced fiber through ``p``."""
    trace = fiber_through(p, dt)
    q = hopf_projection(trace.points)
    return float(np.max(np.linalg.norm(q - q[0], axis=-1)))


def scaling_law(r, dt=1e-2):
    """Action of the characteristic circle of ``S^3(r)`` through ``(r, 0, 0, 0)``."""
    check_positive(r, "r")
    trace = fiber_through(np.array([r, 0.0, 0.0, 0.0]), dt)
    return leaf_action(trace)


def random_sphere_points(m, r=1.0, rng=None):
    rng = np.random.default_rng(rng)
    P = rng.normal(size=(m, 4))
    return r * P / np.linalg.norm(P, axis=1, keepdims=True)
