"""Smooth compactly supported profiles.

Two building blocks, both C-infinity with every derivative vanishing at the
ends of their transition zones:

* ``bell(s) = exp(1 - 1/(1 - s^2))`` on ``|s| < 1``, zero elsewhere, peak 1.
* ``smooth_step(u) = psi(u) / (psi(u) + psi(1 - u))`` with
  ``psi(u) = exp(-1/u)``; 0 for ``u <= 0``, 1 for ``u >= 1``, monotone.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


def _masked(s, mask, fn):
    out = np.zeros(np.shape(s))
    if np.any(mask):
        out[mask] = fn(s[mask])
    return out


def bell(s):
    s = np.asarray(s, dtype=float)
    return _masked(s, np.abs(s) < 1.0, lambda v: np.exp(1.0 - 1.0 / (1.0 - v * v)))


def bell_prime(s):
    s = np.asarray(s, dtype=float)

    def fn(v):
        q = 1.0 - v * v
        return np.exp(1.0 - 1.0 / q) * (-2.0 * v / (q * q))

    return _masked(s, np.abs(s) < 1.0, fn)


def _step_core(u):
    a, b = np.exp(-1.0 / u), np.exp(-1.0 / (1.0 - u))
    return a / (a + b)


def _step_prime_core(u):
    a, b = np.exp(-1.0 / u), np.exp(-1.0 / (1.0 - u))
    da, db = a / (u * u), -b / ((1.0 - u) ** 2)
    return (da * b - a * db) / (a + b) ** 2


def smooth_step(u):
    u = np.asarray(u, dtype=float)
    out = _masked(u, (u > 0) & (u < 1), _step_core)
    out[u >= 1] = 1.0
    return out


def smooth_step_prime(u):
    u = np.asarray(u, dtype=float)
    return _masked(u, (u > 0) & (u < 1), _step_prime_core)


@dataclass(frozen=True)
class BellFunction:
    """Bump of height 1 on the real line.

    Without a plateau this is ``bell((t - center) / half_width)``. With a
    plateau ``[a, b]`` the function is 1 on ``[a, b]`` and rises/falls
    through smooth steps over flanks of width ``half_width`` on either side,
    so the support is ``[a - half_width, b + half_width]``.
    """

    center: float
    half_width: float
    plateau: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.plateau is not None:
            a, b = self.plateau
            if not a <= b:
                raise ValueError(f"degenerate plateau {self.plateau}")
            if not a <= self.center <= b:
                raise ValueError("plateau must contain the center")

    @property
    def support(self):
        if self.plateau is None:
            return (self.center - self.half_width, self.center + self.half_width)
        a, b = self.plateau
        return (a - self.half_width, b + self.half_width)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.plateau is None:
            return bell((t - self.center) / self.half_width)
        a, b = self.plateau
        w = self.half_width
        return smooth_step((t - a + w) / w) * smooth_step((b + w - t) / w)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        w = self.half_width
        if self.plateau is None:
            return bell_prime((t - self.center) / w) / w
        a, b = self.plateau
        up, down = (t - a + w) / w, (b + w - t) / w
        return (smooth_step_prime(up) * smooth_step(down)
                - smooth_step(up) * smooth_step_prime(down)) / w


def build_bell(center, half_width, plateau=None):
    """Construct a :class:`BellFunction`; raises ``ValueError`` on degenerate widths."""
    return BellFunction(float(center), float(half_width),
                        None if plateau is None else (float(plateau[0]), float(plateau[1])))


def bell_prime_over_s(s):
    """``bell'(s) / s``, smooth through ``s = 0`` (where it equals ``-2``)."""
    s = np.asarray(s, dtype=float)

    def fn(v):
        q = 1.0 - v * v
        return np.exp(1.0 - 1.0 / q) * (-2.0 / (q * q))

    return _masked(s, np.abs(s) < 1.0, fn)
