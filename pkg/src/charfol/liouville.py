"""Radial Liouville field, its dual primitive, and extension of shell maps to balls.

``X = -p`` is the contracting field ``-sum r_i d/dr_i``; its flow is
``p e^{-t}``. Its ``omega``-dual one-form is

    lambda0(p, v) = omega(X(p), v) = -sum_i (x_i v_yi - y_i v_xi),

the Cartesian form of ``-sum r_i^2 dtheta_i``. Since ``lambda0`` is linear in
``p``, ``d lambda0 = -2 omega``.

A symplectic map ``g`` given on a shell ``{a < |p| < R}`` extends into the
ball by

    g~(p) = Phi^t_{X'}( g( Phi^{-t}_X(p) ) ),    X' = g_* X,

where the backward ``X``-flow first carries ``p`` out into the shell.
"""

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from ._validation import as_phase, check_positive
from .flow import flow_map, rk4_step, system_from_name
from .symplectic import omega, symplecticity_defect


class ExtensionError(RuntimeError):
    pass


@dataclass(frozen=True)
class OneSidedShell:
    """The shell ``{inner_fraction * R < |p| < R}`` inside the sphere of radius ``R``."""

    R: float
    inner_fraction: float = 0.5

    def __post_init__(self):
        check_positive(self.R, "R")
        if not 0.0 < self.inner_fraction < 1.0:
            raise ValueError(f"inner_fraction must lie in (0, 1), got {self.inner_fraction}")

    @property
    def inner(self):
        return self.inner_fraction * self.R

    @property
    def middle_third(self):
        a, w = self.inner, self.R - self.inner
        return a + w / 3, a + 2 * w / 3

    def contains(self, p):
        r = np.linalg.norm(as_phase(p), axis=-1)
        return (r > self.inner) & (r < self.R)


def radial_field(p):
    return -as_phase(p)


def radial_flow(p, t):
    """Exact time-``t`` flow of :func:`radial_field`."""
    return as_phase(p) * np.exp(-t)


def lambda0(p, v):
    return -omega(p, v)


def interior_product_radial(p, v):
    """``(iota_X omega)(v) = omega(X(p), v)``."""
    return omega(radial_field(p), v)


def exterior_derivative(alpha, p, u, v, h=1e-6):
    """``d alpha_p(u, v)`` for a one-form ``alpha(p, w)``, extending ``u, v`` as constant fields."""
    p, u, v = as_phase(p), as_phase(u, "u"), as_phase(v, "v")
    du = (alpha(p + h * u, v) - alpha(p - h * u, v)) / (2 * h)
    dv = (alpha(p + h * v, u) - alpha(p - h * v, u)) / (2 * h)
    return du - dv


def dlambda0_factor(samples=100, n=2, rng=None):
    """Measured ratios ``d lambda0(u, v) / omega(u, v)`` on random data; about ``-2``."""
    rng = np.random.default_rng(rng)
    P, U, V = (rng.normal(size=(samples, 2 * n)) for _ in range(3))
    return exterior_derivative(lambda0, P, U, V) / omega(U, V)


# --------------------------------------------------------------------------
# test maps


@dataclass(frozen=True)
class ShellMap:
    """A map with inverse and batched Jacobian, all acting on ``(..., 2n)`` arrays."""

    name: str
    forward: Callable
    inverse: Callable
    jacobian: Callable

    def __call__(self, P):
        return self.forward(as_phase(P))

    def defect(self, P):
        """Largest symplecticity defect of the Jacobian over the rows of ``P``."""
        P = np.atleast_2d(as_phase(P))
        return max(symplecticity_defect(Jk) for Jk in self.jacobian(P))


def identity_map():
    def jac(P):
        P = as_phase(P)
        return np.broadcast_to(np.eye(P.shape[-1]), P.shape[:-1] + (P.shape[-1],) * 2).copy()

    return ShellMap("identity", lambda P: as_phase(P).copy(), lambda P: as_phase(P).copy(), jac)


def _rotate(P, angles):
    P = as_phase(P)
    if P.shape[-1] != 2 * len(angles):
        raise ValueError(f"rotation with {len(angles)} angles needs dimension {2 * len(angles)}")
    c, s = np.cos(angles), np.sin(angles)
    out = np.empty_like(P)
    x, y = P[..., 0::2], P[..., 1::2]
    out[..., 0::2] = c * x - s * y
    out[..., 1::2] = s * x + c * y
    return out


def rotation_map(angles):
    """Rotation by ``angles[i]`` in the ``(x_i, y_i)`` plane; unitary, hence symplectic."""
    angles = np.asarray(angles, dtype=float)
    blocks = [np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]) for a in angles]
    M = np.zeros((2 * len(angles),) * 2)
    for i, B in enumerate(blocks):
        M[2 * i:2 * i + 2, 2 * i:2 * i + 2] = B

    def jac(P):
        P = as_phase(P)
        return np.broadcast_to(M, P.shape[:-1] + M.shape).copy()

    label = "rotation:" + ",".join(f"{a:g}" for a in angles)
    return ShellMap(label, lambda P: _rotate(P, angles), lambda P: _rotate(P, -angles), jac)


def flow_shell_map(system, T, dt=5e-2, h=1e-5):
    """Time-``T`` flow of a named Hamiltonian system (implicit midpoint, so ``inverse`` is exact)."""
    sys = system_from_name(system) if isinstance(system, str) else system

    def jac(P):
        P = as_phase(P)
        d = P.shape[-1]
        E = h * np.eye(d)
        starts = np.concatenate([P[..., None, :] + E, P[..., None, :] - E], axis=-2)
        ends = flow_map(sys, starts, T, dt)
        return np.swapaxes((ends[..., :d, :] - ends[..., d:, :]) / (2 * h), -1, -2)

    return ShellMap(f"flow:{sys.label}:{T:g}",
                    lambda P: flow_map(sys, as_phase(P), T, dt),
                    lambda P: flow_map(sys, as_phase(P), -T, dt), jac)


def map_from_name(name):
    """``identity``, ``rotation:a1,a2,...`` or ``flow:<system>:T``."""
    key, _, rest = str(name).partition(":")
    if key == "identity":
        return identity_map()
    if key == "rotation":
        return rotation_map([float(a) for a in rest.split(",")])
    if key == "flow":
        system, _, T = rest.rpartition(":")
        return flow_shell_map(system, float(T))
    raise KeyError(f"unknown test map {name!r}")


# --------------------------------------------------------------------------
# extension by the flow


def pushforward_field(g, Q):
    """``X'(q) = Dg(g^-1 q) X(g^-1 q)``."""
    W = g.inverse(Q)
    return np.einsum("...ij,...j->...i", g.jacobian(W), radial_field(W))


def default_time(shell, p):
    """Smallest ``t >= 0`` putting ``e^t p`` in the middle third of the shell (0 if already past it)."""
    r = np.linalg.norm(as_phase(p), axis=-1)
    lo, _ = shell.middle_third
    return np.where(r >= lo, 0.0, np.log(lo / np.where(r > 0, r, 1.0)))


def extend_embedding(g, p, shell, t_max=20.0, t=None, dt=1e-2):
    """Evaluate the extension ``g~`` at points of the open ball of radius ``shell.R``.

    ``t`` defaults to :func:`default_time`; an explicit ``t`` must move every
    point into the shell. Batches are integrated in rescaled time so all rows
    share one step count.
    """
    P = as_phase(p)
    single = P.ndim == 1
    P = np.atleast_2d(P)
    r = np.linalg.norm(P, axis=-1)
    if np.any(r == 0):
        raise ExtensionError("the origin is fixed by the radial flow and never reaches the shell")
    if np.any(r >= shell.R):
        raise ExtensionError(f"points must lie in the open ball of radius {shell.R:g}")
    tt = default_time(shell, P) if t is None else np.broadcast_to(np.asarray(t, dtype=float), r.shape)
    if np.any(tt < 0) or np.any(tt > t_max):
        raise ExtensionError(f"required flow time {np.max(tt):.3g} exceeds t_max = {t_max:g}")
    W = P * np.exp(tt)[:, None]
    if not np.all(shell.contains(W) | (tt == 0)):
        raise ExtensionError("backward radial orbit does not land in the shell at the chosen t")
    Q = g.forward(W)
    moving = tt > 0
    if np.any(moving):
        n = max(1, int(np.ceil(np.max(tt) / dt)))
        scale = tt[moving][:, None]

        def field(Z):
            if np.any(np.linalg.norm(g.inverse(Z), axis=-1) >= shell.R * (1 + 1e-9)):
                raise ExtensionError("X' evaluated outside the ball it is defined on")
            return scale * pushforward_field(g, Z)

        Z = Q[moving]
        for _ in range(n):
            Z = rk4_step(field, Z, 1.0 / n)
        Q[moving] = Z
    return Q[0] if single else Q


def extension_jacobian(g, p, shell, h=1e-5, **kw):
    """Central-difference Jacobian of :func:`extend_embedding` at a single point."""
    p = as_phase(p)
    d = p.shape[-1]
    E = h * np.eye(d)
    ends = extend_embedding(g, np.concatenate([p + E, p - E]), shell, **kw)
    return ((ends[:d] - ends[d:]) / (2 * h)).T


def forward_completeness(g, points, r, T=5.0, dt=1e-2):
    """Largest norm reached by the ``X'`` flow from ``points`` over ``[0, T]``, and whether it stays below ``r``."""
    Z = np.atleast_2d(as_phase(points))
    n = max(1, int(np.ceil(T / dt)))
    worst = float(np.max(np.linalg.norm(Z, axis=-1)))
    for _ in range(n):
        Z = rk4_step(lambda Y: pushforward_field(g, Y), Z, T / n)
        worst = max(worst, float(np.max(np.linalg.norm(Z, axis=-1))))
    return worst, bool(worst < r)


# --------------------------------------------------------------------------
# volume obstruction


def ball_volume(R, n=2):
    """Volume ``pi^n R^{2n} / n!`` of the ball of radius ``R`` in ``R^{2n}``."""
    check_positive(R, "R")
    return np.pi ** n * R ** (2 * n) / factorial(n)


def monte_carlo_ball_volume(R, n=2, samples=10 ** 6, rng=None):
    rng = np.random.default_rng(rng)
    P = rng.uniform(-R, R, size=(samples, 2 * n))
    inside = np.count_nonzero(np.sum(P * P, axis=1) < R * R)
    return (2 * R) ** (2 * n) * inside / samples


IMPOSSIBLE = "embedding impossible"
COMPATIBLE = "volume-compatible"


def volume_obstruction(R, r, n=2):
    """Compare ``vol B(R)`` with ``vol B(r)``; only the direction ``R > r`` is ruled out."""
    vR, vr = ball_volume(R, n), ball_volume(r, n)
    return {"R": float(R), "r": float(r), "volume_R": float(vR), "volume_r": float(vr),
            "verdict": IMPOSSIBLE if vR > vr else COMPATIBLE}
