"""Explicit smooth hammers on the model hypersurface ``S = {y1 = 0}``.

A hammer between two points ``x`` and ``y`` of one leaf is the flow of

    H = c * sigma * chi(y1) * rho(x1) * prod_{i >= 2} f(r_i)

written in a chart that moves ``x`` to the origin and ``y`` to ``(d, 0, ..., 0)``.
``chi`` is an even bell, ``f`` a bell in ``r_i = |z_i|`` and ``rho`` a
plateau bump whose rising flank is centred on ``x1 = 0`` and whose falling
flank is centred on ``x1 = d``. On ``S`` the only transverse velocity is
``dy1/dt = -c sigma chi(0) rho'(x1) prod f``, so ``S`` is pushed to one side
over the rising flank, to the other side over the falling flank, and left
in place everywhere else. ``c`` slows the circulation around the plateau so
that nothing reaches the opposite flank before ``t = 1``.
"""

from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from ._validation import as_phase
from .bumps import BellFunction, bell, bell_prime_over_s, build_bell
from .flow import HamiltonianSystem, IntegrationError, sample_flow, same_leaf
from .hypersurface import Side

__all__ = [
    "BellFunction", "build_bell", "HammerSpec", "ConditionResult", "HammerReport",
    "hammer_hamiltonian", "verify_hammer", "verify_one_sided", "search_slowdown",
    "hammer_between", "NotSameLeafError", "SlowdownSearchError", "HammerSpecError",
]


class HammerSpecError(ValueError):
    pass


class NotSameLeafError(ValueError):
    pass


class SlowdownSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class HammerSpec:
    n: int
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    epsilon: float
    slowdown: float
    delta: float
    chi_width: float
    f_width: float
    ball_radius: float
    x_side: str = "plus"

    @classmethod
    def from_points(cls, x, y, epsilon, slowdown=0.1, x_side="plus", **widths):
        """Spec with bump widths scaled to ``epsilon``.

        Defaults: flank half-width ``delta = eps/4``, ``chi`` half-width
        ``0.4 eps``, ``f`` half-width ``eps / (4 sqrt(n - 1))`` so the flank
        footprints sit inside the ``eps/2``-balls, support radius ``eps``.
        """
        x = as_phase(x, "x")
        y = as_phase(y, "y")
        if x.shape != y.shape or x.ndim != 1:
            raise HammerSpecError("x and y must be single points of the same dimension")
        n = x.shape[0] // 2
        eps = float(epsilon)
        defaults = dict(delta=eps / 4, chi_width=0.4 * eps,
                        f_width=eps / (4 * np.sqrt(max(n - 1, 1))), ball_radius=eps)
        defaults.update(widths)
        spec = cls(n, tuple(map(float, x)), tuple(map(float, y)), eps, float(slowdown),
                   x_side=x_side, **{k: float(v) for k, v in defaults.items()})
        spec.validate()
        return spec

    @property
    def orientation(self):
        """+1 if ``y`` lies in the ``+x1`` direction from ``x``; the chart rotates by pi otherwise."""
        return 1.0 if self.y[0] >= self.x[0] else -1.0

    @property
    def d(self):
        return float(abs(self.y[0] - self.x[0]))

    def validate(self):
        x, y = np.array(self.x), np.array(self.y)
        if len(x) != 2 * self.n or len(y) != 2 * self.n or self.n < 1:
            raise HammerSpecError("point dimension does not match n")
        if not self.epsilon > 0:
            raise HammerSpecError("epsilon must be positive")
        if not self.slowdown >= 0:
            raise HammerSpecError("slowdown must be nonnegative")
        for name in ("delta", "chi_width", "f_width"):
            w = getattr(self, name)
            if not 0 < w < self.epsilon / 2:
                raise HammerSpecError(f"{name}={w} must lie in (0, epsilon/2)")
        if self.x_side not in ("plus", "minus"):
            raise HammerSpecError("x_side must be 'plus' or 'minus'")
        scale = 1e-9 * (1 + np.max(np.abs(x)))
        if abs(x[1]) > scale or abs(y[1]) > scale:
            raise HammerSpecError("x and y must lie on the hyperplane {y1 = 0}")
        off_axis = np.delete(y - x, 0)
        if np.max(np.abs(off_axis), initial=0.0) > scale:
            raise HammerSpecError("y - x must point along the x1 axis (same leaf of the model)")
        if self.d == 0:
            raise HammerSpecError("x and y coincide")
        if not self.d > 4 * self.delta:
            raise HammerSpecError(f"|x - y| = {self.d} must exceed 4 * delta = {4 * self.delta}")
        reach = np.sqrt(self.delta ** 2 + self.chi_width ** 2 + (self.n - 1) * self.f_width ** 2)
        if reach >= self.ball_radius:
            raise HammerSpecError("bump support does not fit inside ball_radius")
        return self

    def with_slowdown(self, c):
        return replace(self, slowdown=float(c))

    def to_dict(self):
        out = asdict(self)
        out["x"], out["y"] = list(self.x), list(self.y)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["x"], data["y"] = tuple(data["x"]), tuple(data["y"])
        return cls(**data).validate()

    # chart: translation by -x, then rotation by pi in the z1-plane if needed
    def to_model(self, P):
        M = np.asarray(P, dtype=float) - np.array(self.x)
        M[..., 0:2] *= self.orientation
        return M

    def from_model(self, M):
        P = np.array(M, dtype=float)
        P[..., 0:2] *= self.orientation
        return P + np.array(self.x)


def _profiles(spec):
    rho = BellFunction(spec.d / 2, 2 * spec.delta, (spec.delta, spec.d - spec.delta))
    chi = BellFunction(0.0, spec.chi_width)
    return rho, chi


def _model_field(spec, sigma):
    rho, chi = _profiles(spec)
    w = spec.f_width
    c = spec.slowdown * sigma

    def parts(M):
        x1, y1 = M[..., 0], M[..., 1]
        s = [np.hypot(M[..., 2 * i], M[..., 2 * i + 1]) / w for i in range(1, spec.n)]
        fs = [bell(si) for si in s]
        prod_f = np.prod(fs, axis=0) if fs else np.ones_like(x1)
        return x1, y1, s, fs, prod_f

    def H(M):
        x1, y1, _, _, prod_f = parts(M)
        return c * chi(y1) * rho(x1) * prod_f

    def gradH(M):
        x1, y1, s, fs, prod_f = parts(M)
        chv, rv = chi(y1), rho(x1)
        g = np.zeros_like(M, dtype=float)
        g[..., 0] = c * chv * rho.derivative(x1) * prod_f
        g[..., 1] = c * chi.derivative(y1) * rv * prod_f
        for i in range(1, spec.n):
            others = np.prod([fs[j] for j in range(len(fs)) if j != i - 1], axis=0) if len(fs) > 1 \
                else np.ones_like(x1)
            # d f(r)/d x_i = f'(r) x_i / r = bell'(s)/s * x_i / w^2
            k = c * chv * rv * others * bell_prime_over_s(s[i - 1]) / (w * w)
            g[..., 2 * i] = k * M[..., 2 * i]
            g[..., 2 * i + 1] = k * M[..., 2 * i + 1]
        return g

    return H, gradH


def _system(spec, sigma):
    Hm, gradHm = _model_field(spec, sigma)
    o = spec.orientation

    def H(P):
        return Hm(spec.to_model(P))

    def gradH(P):
        g = gradHm(spec.to_model(P))
        g[..., 0:2] *= o
        return g

    return HamiltonianSystem(H, gradH, f"hammer(c={spec.slowdown:g})")


def hammer_sign(spec):
    """Sign ``sigma`` that pushes ``S`` near ``x`` to the requested side.

    Found by evaluating the transverse velocity at ``x`` with ``sigma = +1``.
    """
    probe = replace(spec, slowdown=1.0)
    vel = -_system(probe, 1.0).gradient(np.array(spec.x))[0]
    want = 1.0 if spec.x_side == "plus" else -1.0
    return 1.0 if vel * want > 0 else -1.0


def hammer_hamiltonian(spec):
    """The hammer Hamiltonian of ``spec`` with its analytic gradient."""
    spec.validate()
    return _system(spec, hammer_sign(spec))


# --------------------------------------------------------------------------
# verification


@dataclass
class ConditionResult:
    passed: bool
    margin: float
    samples: int
    detail: str = ""

    def to_dict(self):
        return {"passed": bool(self.passed), "margin": float(self.margin),
                "samples": int(self.samples), "detail": self.detail}


@dataclass
class HammerReport:
    conditions: dict
    support_ok: bool
    slowdown: float
    sigma: float
    grids: dict
    kind: str = "two-sided"
    extra: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self):
        return (self.error is None and self.support_ok
                and all(c.passed for c in self.conditions.values())
                and all(v for k, v in self.extra.items() if k.endswith("_ok")))

    def to_dict(self):
        return {
            "kind": self.kind,
            "passed": bool(self.passed),
            "conditions": {k: v.to_dict() for k, v in self.conditions.items()},
            "support_ok": bool(self.support_ok),
            "slowdown": float(self.slowdown),
            "sigma": float(self.sigma),
            "grids": self.grids,
            "extra": self.extra,
            "error": self.error,
        }


def _interior_grid(lo, hi, g):
    return np.linspace(lo, hi, g + 2)[1:-1]


def _surface_grid(spec, x1_range, zp_half, g):
    """Grid on ``S`` (model coordinates, ``y1 = 0``) over an x1 range and a z' cube."""
    axes = [_interior_grid(*x1_range, g)] + [_interior_grid(-zp_half, zp_half, g)] * (2 * spec.n - 2)
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    M = np.zeros((flat[0].size, 2 * spec.n))
    M[:, 0] = flat[0]
    if spec.n > 1:
        M[:, 2:] = np.stack(flat[1:], axis=1)
    return M


def _in_footprint(spec, M, center_x1):
    """Open flank footprint around ``(center_x1, 0, ..., 0)`` intersected with the eps/2-ball."""
    ok = np.abs(M[:, 0] - center_x1) < spec.delta
    for i in range(1, spec.n):
        ok &= np.hypot(M[:, 2 * i], M[:, 2 * i + 1]) < spec.f_width
    c = np.zeros(2 * spec.n)
    c[0] = center_x1
    return ok & (np.linalg.norm(M - c, axis=1) < spec.epsilon / 2)


def _sample_regions(spec, g):
    zp_half = spec.f_width * (1 - 1e-12)
    near_x = _surface_grid(spec, (-spec.delta, spec.delta), zp_half, g)
    near_y = _surface_grid(spec, (spec.d - spec.delta, spec.d + spec.delta), zp_half, g)
    ux = near_x[_in_footprint(spec, near_x, 0.0)]
    uy = near_y[_in_footprint(spec, near_y, spec.d)]

    pad = spec.delta
    rest = [
        _surface_grid(spec, (-spec.delta - pad, spec.d + spec.delta + pad), spec.f_width + pad, g),
        _surface_grid(spec, (-2 * spec.delta, 2 * spec.delta), 2 * spec.f_width, g),
        _surface_grid(spec, (spec.d - 2 * spec.delta, spec.d + 2 * spec.delta), 2 * spec.f_width, g),
    ]
    rest = np.concatenate(rest)
    rest = rest[~(_in_footprint(spec, rest, 0.0) | _in_footprint(spec, rest, spec.d))]
    return ux, uy, rest


def _support_check(spec, H, gradH, n_samples=2000, seed=0):
    """``H`` and its gradient vanish at random points outside the support capsule."""
    rng = np.random.default_rng(seed)
    x, y = np.array(spec.x), np.array(spec.y)
    lo = np.minimum(x, y) - 3 * spec.ball_radius
    hi = np.maximum(x, y) + 3 * spec.ball_radius
    P = rng.uniform(lo, hi, size=(n_samples, 2 * spec.n))
    seg = y - x
    t = np.clip((P - x) @ seg / (seg @ seg), 0, 1)
    dist = np.linalg.norm(P - (x + t[:, None] * seg), axis=1)
    P = P[dist > spec.ball_radius]
    return bool(np.all(H(P) == 0) and np.all(gradH(P) == 0)), int(len(P))


def _grids(spec, g, T, dt, time_samples, counts):
    return {"space_grid": int(g), "time_samples": int(time_samples), "T": float(T),
            "dt": float(dt), **{k: int(v) for k, v in counts.items()}}


def verify_hammer(spec, T=1.0, dt=None, space_grid=21, time_samples=11, system=None,
                  early_exit=False, tol=1e-9):
    """Check the four hammer conditions on sampled grids.

    ``U_eps(x)`` and ``U_eps(y)`` are the open flank footprints (flank in x1,
    ``r_i < f_width``) intersected with the ``eps/2``-balls. Condition 2/3
    margins are the worst signed ``y1`` over samples and times, condition 4
    margin is ``tol - max |y1|``; every margin must be strictly positive.
    ``system`` overrides the hammer Hamiltonian (e.g. to verify a degenerate
    isotopy against the same regions). Integration failures are reported,
    not raised.
    """
    spec.validate()
    sys = system if system is not None else hammer_hamiltonian(spec)
    sigma = hammer_sign(spec) if system is None else float("nan")
    if dt is None:
        dt = T / (8 * time_samples)
    ux, uy, rest = _sample_regions(spec, space_grid)
    starts = np.concatenate([spec.from_model(ux), spec.from_model(uy), spec.from_model(rest)])
    nx, ny = len(ux), len(uy)
    times = np.linspace(0.0, T, time_samples + 1)[1:]

    def stop(k, t, Q):
        return early_exit and (np.min(Q[:nx, 1]) <= 0 or np.max(Q[nx:nx + ny, 1]) >= 0)

    error = None
    try:
        traj = sample_flow(sys.vector_field, starts, times, dt, on_sample=stop)
    except IntegrationError as exc:
        error = str(exc)
        traj = np.empty((0,) + starts.shape)

    support_ok, n_support = _support_check(spec, sys.H, sys.gradient)
    counts = {"U_x": nx, "U_y": ny, "rest": len(rest), "support_probe": n_support}
    grids = _grids(spec, space_grid, T, dt, len(traj), counts)
    if error is not None:
        fail = ConditionResult(False, float("-inf"), 0, "integration failed")
        conds = {"condition1": ConditionResult(True, 0.0, len(starts)),
                 "condition2": fail, "condition3": fail, "condition4": fail}
        return HammerReport(conds, support_ok, spec.slowdown, sigma, grids, error=error)

    y1 = traj[..., 1]
    m2 = float(np.min(y1[:, :nx])) if nx else float("-inf")
    m3 = float(np.min(-y1[:, nx:nx + ny])) if ny else float("-inf")
    m4 = tol - float(np.max(np.abs(y1[:, nx + ny:]), initial=0.0))
    truncated = "" if len(traj) == len(times) else f"stopped after {len(traj)} time samples"
    conds = {
        "condition1": ConditionResult(True, 0.0, len(starts), "Phi_0 = Id by construction"),
        "condition2": ConditionResult(m2 > 0, m2, nx, truncated),
        "condition3": ConditionResult(m3 > 0, m3, ny, truncated),
        "condition4": ConditionResult(m4 > 0, m4, len(rest), truncated),
    }
    return HammerReport(conds, support_ok, spec.slowdown, sigma, grids)


def verify_one_sided(spec, side="plus", T=1.0, dt=None, space_grid=21, time_samples=11,
                     system=None, tol=1e-9):
    """One-sided variant: conditions 1, 2, 4 on ``closure(U) minus B_eps(y)``.

    ``U`` is the closure of the ``side`` half-space of ``S``. Since the
    restricted isotopy must map into ``U``, condition 2 asks that ``S`` near
    ``x`` is pushed strictly into ``U``; the samples are all points of ``S``
    (hence of ``closure(U)``) at distance at least ``eps`` from ``y``.
    """
    spec.validate()
    side = Side(side)
    if side is Side.ON:
        raise ValueError("side must be 'plus' or 'minus'")
    sgn = 1.0 if side is Side.PLUS else -1.0
    sys = system if system is not None else hammer_hamiltonian(spec)
    sigma = hammer_sign(spec) if system is None else float("nan")
    if dt is None:
        dt = T / (8 * time_samples)
    ux, _, rest = _sample_regions(spec, space_grid)
    ux, rest = spec.from_model(ux), spec.from_model(rest)
    y = np.array(spec.y)
    ux = ux[np.linalg.norm(ux - y, axis=1) >= spec.epsilon]
    rest = rest[np.linalg.norm(rest - y, axis=1) >= spec.epsilon]
    starts = np.concatenate([ux, rest])
    nx = len(ux)
    times = np.linspace(0.0, T, time_samples + 1)[1:]
    support_ok, n_support = _support_check(spec, sys.H, sys.gradient)
    domain_ok = bool(np.all(np.linalg.norm(starts - y, axis=1) >= spec.epsilon))
    grids = _grids(spec, space_grid, T, dt, time_samples,
                   {"U_x": nx, "rest": len(rest), "support_probe": n_support})
    try:
        traj = sample_flow(sys.vector_field, starts, times, dt)
    except IntegrationError as exc:
        fail = ConditionResult(False, float("-inf"), 0, "integration failed")
        conds = {"condition1": ConditionResult(True, 0.0, len(starts)),
                 "condition2": fail, "condition4": fail}
        return HammerReport(conds, support_ok, spec.slowdown, sigma, grids, "one-sided",
                            {"side": side.value, "domain_ok": domain_ok}, error=str(exc))
    y1 = traj[..., 1]
    m2 = float(np.min(sgn * y1[:, :nx])) if nx else float("-inf")
    m4 = tol - float(np.max(np.abs(y1[:, nx:]), initial=0.0))
    range_ok = bool(np.all(sgn * y1 >= -tol))
    conds = {
        "condition1": ConditionResult(True, 0.0, len(starts), "Phi_0 = Id by construction"),
        "condition2": ConditionResult(m2 > 0, m2, nx),
        "condition4": ConditionResult(m4 > 0, m4, len(rest)),
    }
    return HammerReport(conds, support_ok, spec.slowdown, sigma, grids, "one-sided",
                        {"side": side.value, "domain_ok": domain_ok, "range_ok": range_ok})


def search_slowdown(spec, c0=0.1, max_halvings=20, **verify_kw):
    """Halve the slowdown from ``c0`` until :func:`verify_hammer` passes.

    Returns the passing spec and its full report.
    """
    c = float(c0)
    for _ in range(max_halvings + 1):
        trial = spec.with_slowdown(c)
        # early exit only truncates failing runs, so a passing report is complete
        report = verify_hammer(trial, early_exit=True, **verify_kw)
        if report.passed:
            return trial, report
        c /= 2
    raise SlowdownSearchError(f"no passing slowdown down to {2 * c:g}")


def hammer_between(S, x, y, epsilon, max_length=4.0, c0=0.1, max_halvings=20, **verify_kw):
    """Build a verified hammer between two points of one leaf of the hyperplane model.

    Raises :class:`NotSameLeafError` when the leaf oracle says ``x`` and ``y``
    lie on different leaves.
    """
    if S.name != "hyperplane":
        raise ValueError("hammers are built on the hyperplane model {y1 = 0} only")
    x = as_phase(x, "x")
    y = as_phase(y, "y")
    if not same_leaf(S, x, y, max_length=max_length):
        raise NotSameLeafError("x and y are not on the same characteristic leaf")
    # the oracle accepts y up to its hit tolerance; snap it onto the leaf of x
    y_leaf = x.copy()
    y_leaf[0] = y[0]
    spec = HammerSpec.from_points(x, y_leaf, epsilon)
    return search_slowdown(spec, c0, max_halvings, **verify_kw)[0]
