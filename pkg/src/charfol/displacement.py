"""Pushing sets off the cylinder boundary ``dZ(1)`` into its interior.

The compact set ``K`` on ``dZ(1) = {|z1| = 1}`` is described as an
:class:`ArcSet`: for each base point ``z'`` (with a footprint radius) a list
of angular arcs in the ``z1`` circle. When all entries miss a common angular
gap, the function

    H = -A(theta) * beta(|z1|) * eta(z')

strictly decreases along the characteristic flow ``J N = d/dtheta`` near
``K``: ``A`` increases with unit slope everywhere except inside the gap,
where a smooth step absorbs the full period so ``A`` is single valued;
``beta`` equals 1 near ``|z1| = 1`` and ``eta`` equals 1 on the footprints.
Its Hamiltonian flow moves those points radially inward at unit speed.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ._validation import as_point_cloud, check_positive
from .bumps import BellFunction, smooth_step, smooth_step_prime
from .flow import HamiltonianSystem, sample_flow
from .hypersurface import cylinder, outward_normal
from .symplectic import apply_J

TWO_PI = 2.0 * np.pi


class NoCommonGapError(ValueError):
    """The arcs leave no common gap; outside the supported class, not a counterexample."""


class CertificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArcEntry:
    base: Tuple[float, ...]
    radius: float
    arcs: Tuple[Tuple[float, float], ...]


def _normalize_arcs(arcs):
    """Merge arcs into disjoint intervals of ``[0, 2 pi]``; wrapping arcs are split."""
    pieces = []
    for a, b in arcs:
        a, b = float(a), float(b)
        if b < a:
            raise ValueError(f"arc [{a}, {b}] has end before start")
        if b - a >= TWO_PI:
            return [(0.0, TWO_PI)]
        a0 = a % TWO_PI
        b0 = a0 + (b - a)
        if b0 <= TWO_PI:
            pieces.append((a0, b0))
        else:
            pieces += [(a0, TWO_PI), (0.0, b0 - TWO_PI)]
    pieces.sort()
    merged = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


@dataclass(frozen=True)
class ArcSet:
    entries: Tuple[ArcEntry, ...]
    resolution: float = 1e-3

    @classmethod
    def from_config(cls, entries, resolution=1e-3):
        """Build from ``[{"base": [...], "radius": s, "arcs": [[a, b], ...]}, ...]``."""
        out = []
        for e in entries:
            arcs = tuple((float(a), float(b)) for a, b in e["arcs"])
            out.append(ArcEntry(tuple(map(float, e.get("base", ()))), float(e.get("radius", 0.0)), arcs))
        return cls(tuple(out), float(resolution))

    def to_config(self):
        return {"resolution": self.resolution,
                "entries": [{"base": list(e.base), "radius": e.radius, "arcs": [list(a) for a in e.arcs]}
                            for e in self.entries]}

    @property
    def n(self):
        return len(self.entries[0].base) // 2 + 1

    def merged_arcs(self):
        return _normalize_arcs([a for e in self.entries for a in e.arcs])

    def validate(self):
        if not self.entries:
            raise ValueError("ArcSet needs at least one entry")
        check_positive(self.resolution, "resolution")
        dims = {len(e.base) for e in self.entries}
        if len(dims) != 1 or dims.pop() % 2:
            raise ValueError("all base points must share an even dimension 2n - 2")
        for e in self.entries:
            if e.radius < 0:
                raise ValueError("footprint radius must be nonnegative")
            if _largest_gap(_normalize_arcs(e.arcs))[1] < self.resolution:
                raise NoCommonGapError(f"entry at {e.base} covers a full characteristic circle")
        return self


def _largest_gap(merged):
    """``(start, width)`` of the widest complementary interval on the circle."""
    if not merged:
        return 0.0, TWO_PI
    best = (0.0, -1.0)
    for (a0, b0), (a1, _) in zip(merged, merged[1:] + [(merged[0][0] + TWO_PI, None)]):
        width = a1 - b0
        if width > best[1]:
            best = (b0 % TWO_PI, width)
    return best


def find_common_gap(K):
    """Widest angular interval ``[theta0, theta1]`` missed by every entry of ``K``.

    ``theta1`` may exceed ``2 pi`` when the gap wraps through angle 0.
    """
    K.validate()
    start, width = _largest_gap(K.merged_arcs())
    if width < K.resolution:
        raise NoCommonGapError(
            f"no common gap of width >= {K.resolution:g}; the arcs of different entries "
            "cover the whole circle together")
    return (start, start + width)


@dataclass
class CertificationReport:
    ok: bool
    c0: float
    samples: int
    angular_samples: int
    transverse_samples: int
    worst_point: List[float]
    max_normal_velocity: float
    identity_mismatch: float

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in self.__dict__.items()}


@dataclass
class DisplacingHamiltonian:
    arcset: ArcSet
    gap: Tuple[float, float]
    system: HamiltonianSystem
    thicken: float
    radial_plateau: float
    cutoff_width: float
    certificate: CertificationReport = None

    @property
    def H(self):
        return self.system.H

    @property
    def gradH(self):
        return self.system.gradient


def _angle_function(gap):
    """``A(theta)`` and ``A'(theta)``: slope 1 off the gap core, smooth and periodic."""
    g0, g1 = gap
    width = g1 - g0
    core_lo, core_len = width / 4, width / 2

    def phase(theta):
        # angle measured from the end of the gap; the gap occupies [2 pi - width, 2 pi)
        return np.mod(theta - g1, TWO_PI)

    def A(theta):
        phi = phase(theta)
        u = (phi - (TWO_PI - width) - core_lo) / core_len
        return phi - TWO_PI * smooth_step(u)

    def A_prime(theta):
        phi = phase(theta)
        u = (phi - (TWO_PI - width) - core_lo) / core_len
        return 1.0 - TWO_PI * smooth_step_prime(u) / core_len

    return A, A_prime


def sullivan_function(K, gap=None, radial_plateau=0.25, cutoff_width=0.1, thicken=None,
                      angular_samples=200, transverse_samples=20, certify=True):
    """Displacing Hamiltonian for an arc set with a common gap.

    ``beta`` is 1 for ``| |z1| - 1 | <= radial_plateau`` and vanishes beyond
    ``2 * radial_plateau``; ``eta`` is 1 on each footprint ball and vanishes
    ``cutoff_width`` beyond it. Certification samples arcs thickened by
    ``thicken`` radians (default an eighth of the gap) and raises
    :class:`CertificationError` if ``dH(JN) < 0`` fails anywhere.
    """
    K.validate()
    if gap is None:
        gap = find_common_gap(K)
    width = gap[1] - gap[0]
    if thicken is None:
        thicken = width / 8
    if not 0 <= thicken < width / 4:
        raise ValueError("thickening must stay outside the gap core")
    n = K.n
    A, A_prime = _angle_function(gap)
    beta = BellFunction(1.0, radial_plateau, (1.0 - radial_plateau, 1.0 + radial_plateau))
    bases = np.array([e.base for e in K.entries], dtype=float).reshape(len(K.entries), 2 * n - 2)
    radii = np.array([e.radius for e in K.entries])

    def eta_parts(P):
        if n == 1:
            one = np.ones(P.shape[:-1])
            return one, np.zeros(P.shape)
        zp = P[..., 2:]
        prod = np.ones(P.shape[:-1])
        grad = np.zeros(P.shape[:-1] + (2 * n - 2,))
        factors = []
        for b, s in zip(bases, radii):
            diff = zp - b
            dist = np.linalg.norm(diff, axis=-1)
            u = (dist - s) / cutoff_width
            eta_k = 1.0 - smooth_step(u)
            deta_k = -smooth_step_prime(u) / cutoff_width
            unit = diff / np.where(dist > 0, dist, 1.0)[..., None]
            factors.append((1.0 - eta_k, -deta_k[..., None] * unit))
        # eta = 1 - prod_k (1 - eta_k)
        for k, (q, _) in enumerate(factors):
            prod = prod * q
        for k, (_, dq) in enumerate(factors):
            others = np.ones(P.shape[:-1])
            for j, (q, _) in enumerate(factors):
                if j != k:
                    others = others * q
            grad = grad - others[..., None] * dq
        full = np.zeros(P.shape)
        full[..., 2:] = grad
        return 1.0 - prod, full

    def H(P):
        P = np.asarray(P, dtype=float)
        rho = np.hypot(P[..., 0], P[..., 1])
        theta = np.arctan2(P[..., 1], P[..., 0])
        return -A(theta) * beta(rho) * eta_parts(P)[0]

    def gradH(P):
        P = np.asarray(P, dtype=float)
        x, y = P[..., 0], P[..., 1]
        rho = np.hypot(x, y)
        safe = np.where(rho > 0, rho, 1.0)
        theta = np.arctan2(y, x)
        a, da = A(theta), A_prime(theta)
        b, db = beta(rho), beta.derivative(rho)
        e, de = eta_parts(P)
        g = -(a * b)[..., None] * de
        # d theta = (-y dx + x dy) / rho^2, d rho = (x dx + y dy) / rho
        g[..., 0] += -e * (da * b * (-y) / safe ** 2 + a * db * x / safe)
        g[..., 1] += -e * (da * b * x / safe ** 2 + a * db * y / safe)
        return g

    sys = HamiltonianSystem(H, gradH, "sullivan")
    out = DisplacingHamiltonian(K, tuple(map(float, gap)), sys, float(thicken),
                                float(radial_plateau), float(cutoff_width))
    if certify:
        out.certificate = certify_displacing(out, angular_samples, transverse_samples)
        if not out.certificate.ok:
            raise CertificationError(
                f"dH(JN) >= 0 at {out.certificate.worst_point} (c0 = {out.certificate.c0:g})")
    return out


def neighbourhood_samples(Hd, angular_samples=200, transverse_samples=20, seed=0):
    """Points of ``dZ(1)`` covering the thickened arcs over each footprint."""
    rng = np.random.default_rng(seed)
    n = Hd.arcset.n
    pts = []
    for entry in Hd.arcset.entries:
        arcs = _normalize_arcs([(a - Hd.thicken, b + Hd.thicken) for a, b in entry.arcs])
        total = sum(b - a for a, b in arcs)
        for a, b in arcs:
            k = max(2, int(round(angular_samples * (b - a) / total)))
            thetas = np.linspace(a, b, k)
            if n == 1:
                offsets = np.zeros((1, 0))
            else:
                # transverse samples fill the footprint ball, centre included
                dirs = rng.normal(size=(transverse_samples, 2 * n - 2))
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                radii = entry.radius * np.linspace(0, 1, transverse_samples) ** (1 / (2 * n - 2))
                offsets = dirs * radii[:, None]
            for off in offsets:
                P = np.zeros((k, 2 * n))
                P[:, 0], P[:, 1] = np.cos(thetas), np.sin(thetas)
                P[:, 2:] = np.array(entry.base) + off
                pts.append(P)
    return np.concatenate(pts)


def certify_displacing(Hd, angular_samples=200, transverse_samples=20):
    """Sample ``dH(JN)`` on a neighbourhood of ``K`` in ``dZ(1)``; ``c0`` is the worst ``-dH(JN)``."""
    P = neighbourhood_samples(Hd, angular_samples, transverse_samples)
    N = outward_normal(cylinder(), P)
    JN = apply_J(N)
    grad = Hd.gradH(P)
    dH_JN = np.sum(grad * JN, axis=-1)
    XH = Hd.system.vector_field(P)
    inner = np.sum(XH * N, axis=-1)
    worst = int(np.argmax(dH_JN))
    return CertificationReport(
        ok=bool(np.all(dH_JN < 0) and np.all(inner < 0)),
        c0=float(-np.max(dH_JN)),
        samples=int(len(P)),
        angular_samples=int(angular_samples),
        transverse_samples=int(transverse_samples),
        worst_point=[float(v) for v in P[worst]],
        max_normal_velocity=float(np.max(inner)),
        identity_mismatch=float(np.max(np.abs(inner - dH_JN))),
    )


@dataclass
class DisplacementResult:
    points: np.ndarray
    margin: float
    success: bool
    flagged: int
    tau: float

    def to_dict(self):
        return {"margin": float(self.margin), "success": bool(self.success),
                "flagged": int(self.flagged), "tau": float(self.tau), "points": int(len(self.points))}


def displace_inward(cloud, Hd, tau, dt=1e-2, time_samples=10):
    """Flow a cloud in the closed cylinder for time ``tau``.

    The margin is ``1 - max |z1|^2`` over the moved cloud and must be
    positive. Along the way, any point on or outside ``dZ(1)`` whose radial
    velocity is not strictly inward is counted in ``flagged``.
    """
    P = as_point_cloud(cloud, "cloud")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if np.any(P[:, 0] ** 2 + P[:, 1] ** 2 > 1 + 1e-9):
        raise ValueError("cloud must lie in the closed cylinder")
    flagged = np.zeros(len(P), dtype=bool)

    def watch(Q):
        r2 = Q[:, 0] ** 2 + Q[:, 1] ** 2
        on = r2 >= 1 - 1e-12
        if np.any(on):
            V = Hd.system.vector_field(Q[on])
            radial = Q[on, 0] * V[:, 0] + Q[on, 1] * V[:, 1]
            idx = np.flatnonzero(on)[radial >= 0]
            flagged[idx] = True

    watch(P)
    if tau > 0:
        times = np.linspace(0, tau, time_samples + 1)[1:]
        traj = sample_flow(Hd.system.vector_field, P, times, dt,
                           on_sample=lambda k, t, Q: watch(Q))
        moved = traj[-1]
    else:
        moved = P.copy()
    margin = float(1.0 - np.max(moved[:, 0] ** 2 + moved[:, 1] ** 2))
    return DisplacementResult(moved, margin, bool(margin > 0 and not flagged.any()),
                              int(flagged.sum()), float(tau))


def thickened_arc_cloud(Hd, depth=0.05, radial_samples=5, angular_samples=100, transverse_samples=5):
    """Samples of a thin inner collar of ``K``: ``1 - depth <= |z1| <= 1`` over the arcs."""
    base = neighbourhood_samples(Hd, angular_samples, transverse_samples)
    layers = []
    for s in np.linspace(1.0 - depth, 1.0, radial_samples):
        Q = base.copy()
        Q[:, 0:2] *= s
        layers.append(Q)
    return np.concatenate(layers)
