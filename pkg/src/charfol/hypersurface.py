"""Hypersurfaces of R^2n given as regular level sets ``{F = 0}``.

Convention: ``F < 0`` on the inside, so ``grad F`` points outward and the
side ``S+`` is ``{F > 0}``. For the hyperplane ``{y1 = 0}`` this makes
``S+ = {y1 > 0}``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ._validation import as_phase
from .symplectic import apply_J, fd_gradient


class Side(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    ON = "on"


class OffSurfaceError(ValueError):
    pass


class ProjectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class LevelSetSurface:
    F: Callable
    gradF: Optional[Callable] = None
    tol: float = 1e-9
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def value(self, p):
        return self.F(as_phase(p))

    def gradient(self, p):
        p = as_phase(p)
        if self.gradF is None:
            return fd_gradient(self.F, p)
        return self.gradF(p)

    def _require_on(self, p):
        val = np.abs(self.F(p))
        if np.any(val > self.tol):
            raise OffSurfaceError(
                f"point not on {self.name}: |F| = {np.max(val):.3e} > tol {self.tol:.1e}")


def hyperplane(tol=1e-9):
    """The model hypersurface ``{Im z1 = 0}``."""

    def F(p):
        return p[..., 1]

    def gradF(p):
        g = np.zeros_like(p)
        g[..., 1] = 1.0
        return g

    return LevelSetSurface(F, gradF, tol, "hyperplane")


def sphere(r=1.0, tol=1e-9):
    if not r > 0:
        raise ValueError(f"sphere radius must be positive, got {r}")
    r = float(r)

    def F(p):
        return np.sum(p * p, axis=-1) - r * r

    def gradF(p):
        return 2.0 * p

    return LevelSetSurface(F, gradF, tol, f"sphere:{r:g}", {"r": r})


def cylinder(tol=1e-9):
    """Boundary of ``Z(1) = B^2(1) x C^(n-1)``."""

    def F(p):
        return p[..., 0] ** 2 + p[..., 1] ** 2 - 1.0

    def gradF(p):
        g = np.zeros_like(p)
        g[..., 0] = 2.0 * p[..., 0]
        g[..., 1] = 2.0 * p[..., 1]
        return g

    return LevelSetSurface(F, gradF, tol, "cylinder")


def ellipsoid12(tol=1e-9):
    """Boundary of ``E(1, 2) = {|z1|^2 + |z'|^2 / 4 <= 1}``."""

    def F(p):
        return p[..., 0] ** 2 + p[..., 1] ** 2 + np.sum(p[..., 2:] ** 2, axis=-1) / 4.0 - 1.0

    def gradF(p):
        g = p / 2.0
        g[..., 0:2] = 2.0 * p[..., 0:2]
        return g

    return LevelSetSurface(F, gradF, tol, "ellipsoid12")


def surface_from_name(name, tol=1e-9):
    """Catalog lookup: ``hyperplane``, ``sphere:r``, ``cylinder``, ``ellipsoid12``."""
    key, _, arg = str(name).partition(":")
    if key == "hyperplane":
        return hyperplane(tol)
    if key == "sphere":
        return sphere(float(arg) if arg else 1.0, tol)
    if key == "cylinder":
        return cylinder(tol)
    if key == "ellipsoid12":
        return ellipsoid12(tol)
    raise KeyError(f"unknown surface {name!r}")


CATALOG = ("hyperplane", "sphere:r", "cylinder", "ellipsoid12")


def outward_normal(S, p):
    """Unit normal ``grad F / |grad F|`` at a point of ``S``."""
    p = as_phase(p)
    S._require_on(p)
    g = S.gradient(p)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise OffSurfaceError(f"vanishing gradient on {S.name}")
    return g / norm


def characteristic_direction(S, p):
    """Unit vector ``J N`` spanning the kernel of ``omega`` restricted to ``T_p S``."""
    return apply_J(outward_normal(S, p))


def side_of(S, p):
    val = float(S.value(p))
    if val > S.tol:
        return Side.PLUS
    if val < -S.tol:
        return Side.MINUS
    return Side.ON


def project_to_surface(S, p, max_iter=50):
    """Newton iteration along ``grad F`` back onto ``{F = 0}``.

    Reliable for ``|F(p)|`` up to about ``1e3 * tol`` (the drift produced by
    leaf tracing); it usually converges from much farther out.
    """
    q = np.array(as_phase(p), dtype=float)
    for _ in range(max_iter):
        val = S.F(q)
        if np.all(np.abs(val) <= S.tol):
            return q
        g = S.gradient(q)
        g2 = np.sum(g * g, axis=-1)
        if np.any(g2 == 0):
            raise ProjectionError(f"vanishing gradient while projecting onto {S.name}")
        q = q - (val / g2)[..., None] * g
    if np.all(np.abs(S.F(q)) <= S.tol):
        return q
    raise ProjectionError(f"projection onto {S.name} did not converge in {max_iter} iterations")
