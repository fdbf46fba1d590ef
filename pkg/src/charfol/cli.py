"""Command-line front end: one scenario per invocation.

Usage::

    charfol <command> [--config FILE] [--set key=value ...] [--seed N] [--out DIR]
                      [--no-csv] [--no-svg]

Configuration precedence, lowest first: built-in defaults, the config file
(YAML or JSON), the ``CHARFOL_OUTPUT_DIR`` environment variable (output
directory only), ``--set`` overrides (dotted keys reach into nested
mappings), then ``--seed`` and ``--out``.

Every run writes ``<command>.json`` (resolved config, outputs, checks,
tolerances, wall time) and, when enabled, a CSV trajectory and an SVG
projection. Exit status: 0 when every check passes, 1 when a check fails
(artifacts are still written), 2 for configuration errors.
"""

import argparse
import copy
import json
import os
import sys
import time

import numpy as np
import yaml

from . import displacement, hammer, hopf, liouville
from .export import RESULT_SCHEMA, write_csv, write_json, write_svg
from .flow import IntegrationError, integrate, leaf_action, trace_leaf
from .hypersurface import ProjectionError, surface_from_name
from .symplectic import symplecticity_defect

ENV_OUTPUT_DIR = "CHARFOL_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


# Failures of the computation itself; recorded in the result rather than
# treated as bad configuration.
DOMAIN_ERRORS = (hammer.NotSameLeafError, hammer.SlowdownSearchError,
                 displacement.NoCommonGapError, displacement.CertificationError,
                 liouville.ExtensionError, IntegrationError, ProjectionError)

COMMON = {"seed": 0, "output_dir": "charfol-out", "csv": True, "svg": True}

_HAMMER_POINTS = {"x": [0.0, 0.0, 0.0, 0.0], "y": [0.5, 0.0, 0.0, 0.0], "epsilon": 0.05}

DEFAULTS = {
    "trace-leaf": {"surface": "sphere:1", "point": [1.0, 0.0, 0.0, 0.0], "max_length": 20.0,
                   "dt": 1e-2, "direction": 1, "expect_closed": None,
                   "expected_action": None, "action_tol": 1e-6},
    "build-hammer": {"surface": "hyperplane", **_HAMMER_POINTS, "c0": 0.1,
                     "max_halvings": 20, "max_length": 4.0},
    "verify-hammer": {**_HAMMER_POINTS, "slowdown": "auto", "x_side": "plus", "c0": 0.1,
                      "T": 1.0, "space_grid": 21, "time_samples": 11, "tol": 1e-9},
    "verify-one-sided": {**_HAMMER_POINTS, "slowdown": "auto", "x_side": "plus", "side": "plus",
                         "c0": 0.1, "T": 1.0, "space_grid": 21, "time_samples": 11,
                         "tol": 1e-9},
    "displace": {"arcs": [{"base": [0.0, 0.0], "radius": 0.0, "arcs": [[0.0, 1.5 * np.pi]]}],
                 "resolution": 1e-3, "tau": 0.05, "dt": 1e-2, "depth": 0.05,
                 "angular_samples": 200, "transverse_samples": 20},
    "hopf-area": {"grid": 256, "theta_range": [0.0, np.pi], "pullback_samples": 50,
                  "radius": 1.0, "area_tol": 1e-4, "pullback_tol": 1e-6},
    "scaling-law": {"radii": [0.5, 1.0, 2.0], "dt": 1e-2, "tol": 1e-6},
    "extend-map": {"map": "rotation:0.3,1.1", "dim": 4, "R": 1.0, "inner_fraction": 0.5, "points": 10,
                   "t_shift": 0.3, "dt": 1e-2, "tind_tol": 1e-8, "defect_tol": 1e-6,
                   "coherence_tol": 1e-10, "map_defect_tol": 1e-8},
    "duality-check": {"samples": 100, "n": 2, "tol": 1e-12, "factor_tol": 1e-6},
    "volume-check": {"R_values": [0.5, 0.75, 1.0, 1.5, 2.0], "r_values": [0.5, 0.75, 1.0, 1.5, 2.0],
                     "mc_samples": 1000000, "mc_rel_tol": 0.01},
}

COMMANDS = tuple(DEFAULTS)


# --------------------------------------------------------------------------
# configuration


def _coerce(key, value, default):
    if default is None or value is None:
        return value
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            raise TypeError
        if isinstance(default, int):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, str):
            return value if isinstance(value, (str, float, int)) and not isinstance(value, bool) else str(value)
        if isinstance(default, list) and not isinstance(value, list):
            raise TypeError
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot use {value!r} where {type(default).__name__} is expected") from None
    return value


def _set_dotted(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError):
                raise ConfigError(f"bad index {part!r} in {key}") from None
        else:
            node = node.setdefault(part, {})
    last = parts[-1]
    if isinstance(node, list):
        try:
            node[int(last)] = value
        except (ValueError, IndexError):
            raise ConfigError(f"bad index {last!r} in {key}") from None
    else:
        node[last] = value


def load_config_file(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    return data


def resolve_config(command, file_cfg=None, overrides=(), seed=None, out=None, env=None):
    """Merge defaults, file, environment and flags; reject unknown keys."""
    env = os.environ if env is None else env
    defaults = {**COMMON, **DEFAULTS[command]}
    cfg = copy.deepcopy(defaults)
    file_cfg = dict(file_cfg or {})
    named = file_cfg.pop("command", command)
    if named != command:
        raise ConfigError(f"config is for {named!r}, not {command!r}")
    cfg.update(file_cfg)
    if env.get(ENV_OUTPUT_DIR):
        cfg["output_dir"] = env[ENV_OUTPUT_DIR]
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value for {key}: {exc}") from None
        _set_dotted(cfg, key, value)
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["output_dir"] = out
    unknown = sorted(set(cfg) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    for key, default in defaults.items():
        cfg[key] = _coerce(key, cfg[key], default)
    return cfg


# --------------------------------------------------------------------------
# scenarios
#
# Each returns (outputs, checks, artifacts) where artifacts may carry a
# "trajectory" (times, points, energy) and "svg" (list of (label, points)).


def _check(name, passed, value=None, tolerance=None, detail=""):
    out = {"name": name, "passed": bool(passed)}
    if value is not None:
        out["value"] = value
    if tolerance is not None:
        out["tolerance"] = tolerance
    if detail:
        out["detail"] = detail
    return out


def _trace_leaf(cfg):
    S = surface_from_name(cfg["surface"])
    p0 = np.asarray(cfg["point"], dtype=float)
    trace = trace_leaf(S, p0, cfg["max_length"], cfg["dt"], cfg["direction"])
    outputs = {"closed": trace.closed, "length": trace.length, "points": len(trace.points),
               "end_point": trace.points[-1], "action": None}
    checks = [_check("trace", True)]
    if trace.closed:
        outputs["action"] = leaf_action(trace)
    if cfg["expect_closed"] is not None:
        checks.append(_check("closed", trace.closed == bool(cfg["expect_closed"]), trace.closed))
    if cfg["expected_action"] is not None:
        err = abs(outputs["action"] - float(cfg["expected_action"])) if trace.closed else float("inf")
        checks.append(_check("action", err <= cfg["action_tol"], err, cfg["action_tol"]))
    art = {"trajectory": (trace.arclength, trace.points, S.value(trace.points)),
           "svg": [("leaf", trace.points)]}
    return outputs, checks, art


def _hammer_spec(cfg, verify_kw):
    spec = hammer.HammerSpec.from_points(cfg["x"], cfg["y"], cfg["epsilon"],
                                         x_side=cfg.get("x_side", "plus"))
    if cfg.get("slowdown", "auto") == "auto":
        spec, _ = hammer.search_slowdown(spec, cfg["c0"], **verify_kw)
    else:
        spec = spec.with_slowdown(float(cfg["slowdown"]))
    return spec


def _hammer_artifacts(spec, T):
    sys_ = hammer.hammer_hamiltonian(spec)
    dt = T / 88
    tx = integrate(sys_, np.array(spec.x), T, dt)
    ty = integrate(sys_, np.array(spec.y), T, dt)
    return {"trajectory": (tx.times, tx.points, tx.energy),
            "svg": [("x", tx.points), ("y", ty.points)]}


def _build_hammer(cfg):
    S = surface_from_name(cfg["surface"])
    spec = hammer.hammer_between(S, cfg["x"], cfg["y"], cfg["epsilon"], cfg["max_length"],
                                 cfg["c0"], cfg["max_halvings"])
    report = hammer.verify_hammer(spec)
    outputs = {"spec": spec.to_dict(), "report": report.to_dict()}
    return outputs, [_check("hammer_verified", report.passed)], _hammer_artifacts(spec, 1.0)


def _condition_checks(report):
    checks = [_check(name, c.passed, c.margin, 0.0) for name, c in sorted(report.conditions.items())]
    checks.append(_check("support", report.support_ok))
    for key, val in sorted(report.extra.items()):
        if key.endswith("_ok"):
            checks.append(_check(key, val))
    if report.error:
        checks.append(_check("integration", False, detail=report.error))
    return checks


def _verify_kw(cfg):
    return {"T": cfg["T"], "space_grid": cfg["space_grid"], "time_samples": cfg["time_samples"],
            "tol": cfg["tol"]}


def _verify_hammer(cfg):
    kw = _verify_kw(cfg)
    spec = _hammer_spec(cfg, kw)
    report = hammer.verify_hammer(spec, **kw)
    outputs = {"spec": spec.to_dict(), "report": report.to_dict()}
    return outputs, _condition_checks(report), _hammer_artifacts(spec, cfg["T"])


def _verify_one_sided(cfg):
    kw = _verify_kw(cfg)
    spec = _hammer_spec(cfg, kw)
    report = hammer.verify_one_sided(spec, cfg["side"], **kw)
    outputs = {"spec": spec.to_dict(), "report": report.to_dict()}
    return outputs, _condition_checks(report), _hammer_artifacts(spec, cfg["T"])


def _displace(cfg):
    K = displacement.ArcSet.from_config(cfg["arcs"], cfg["resolution"])
    Hd = displacement.sullivan_function(K, angular_samples=cfg["angular_samples"],
                                        transverse_samples=cfg["transverse_samples"])
    cloud = displacement.thickened_arc_cloud(Hd, cfg["depth"])
    result = displacement.displace_inward(cloud, Hd, cfg["tau"], cfg["dt"])
    cert = Hd.certificate
    outputs = {"gap": Hd.gap, "certificate": cert.to_dict(), "displacement": result.to_dict(),
               "max_rho_squared": 1.0 - result.margin}
    checks = [_check("certified", cert.ok and cert.c0 > 0, cert.c0, 0.0),
              _check("margin", result.margin > 0, result.margin, 0.0),
              _check("no_flagged", result.flagged == 0, result.flagged)]
    p0 = np.zeros(2 * K.n)
    p0[0] = 1.0
    tr = integrate(Hd.system, p0, cfg["tau"], cfg["dt"])
    art = {"trajectory": (tr.times, tr.points, tr.energy),
           "svg": [("cloud", cloud[:: max(1, len(cloud) // 400)]),
                   ("moved", result.points[:: max(1, len(cloud) // 400)])]}
    return outputs, checks, art


def _hopf_area(cfg):
    t0, t1 = cfg["theta_range"]
    area = hopf.total_base_area(cfg["grid"], (t0, t1))
    expected = np.pi * (np.cos(t0) - np.cos(t1)) / 2
    rng = np.random.default_rng(cfg["seed"])
    m, r = cfg["pullback_samples"], cfg["radius"]
    P = hopf.random_sphere_points(m, r, rng)
    U, V = rng.normal(size=(m, 4)), rng.normal(size=(m, 4))
    defect = float(np.max(hopf.pullback_defect(P, U, V)))
    outputs = {"area": area, "expected_area": expected, "area_error": abs(area - expected),
               "max_pullback_defect": defect}
    checks = [_check("area", abs(area - expected) <= cfg["area_tol"], abs(area - expected),
                     cfg["area_tol"]),
              _check("pullback", defect <= cfg["pullback_tol"], defect, cfg["pullback_tol"])]
    fibers = [hopf.fiber_through(p) for p in P[:4]]
    tr = fibers[0]
    art = {"trajectory": (tr.arclength, tr.points, surface_from_name(f"sphere:{r}").value(tr.points)),
           "svg": [(f"fiber{k}", f.points) for k, f in enumerate(fibers)]}
    return outputs, checks, art


def _scaling_law(cfg):
    rows, checks = [], []
    for r in cfg["radii"]:
        r = float(r)
        action = hopf.scaling_law(r, cfg["dt"])
        err = abs(action - np.pi * r * r)
        rows.append({"r": r, "action": action, "pi_r2": np.pi * r * r, "error": err})
        checks.append(_check(f"r={r:g}", err <= cfg["tol"], err, cfg["tol"]))
    traces = [hopf.fiber_through(np.array([r, 0.0, 0.0, 0.0]), cfg["dt"]) for r in cfg["radii"]]
    tr = traces[-1]
    art = {"trajectory": (tr.arclength, tr.points, np.sum(tr.points ** 2, axis=1) - float(cfg["radii"][-1]) ** 2),
           "svg": [(f"r={r:g}", t.points) for r, t in zip(cfg["radii"], traces)]}
    return {"laws": rows}, checks, art


def _extend_map(cfg):
    g = liouville.map_from_name(cfg["map"])
    shell = liouville.OneSidedShell(cfg["R"], cfg["inner_fraction"])
    rng = np.random.default_rng(cfg["seed"])
    m = cfg["points"]
    dim = cfg["dim"]
    lo, _ = shell.middle_third
    dirs = rng.normal(size=(m, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    P = dirs * rng.uniform(0.1 * lo, 0.9 * lo, size=(m, 1))
    a = liouville.extend_embedding(g, P, shell, dt=cfg["dt"])
    b = liouville.extend_embedding(g, P, shell, t=liouville.default_time(shell, P) + cfg["t_shift"],
                                   dt=cfg["dt"])
    tind = float(np.max(np.abs(a - b)))
    defect = max(symplecticity_defect(liouville.extension_jacobian(g, p, shell, dt=cfg["dt"]))
                 for p in P)
    Ps = dirs * rng.uniform(shell.inner * 1.01, shell.R * 0.99, size=(m, 1))
    coherence = float(np.max(np.abs(liouville.extend_embedding(g, Ps, shell, dt=cfg["dt"]) - g(Ps))))
    map_defect = g.defect(Ps)
    outputs = {"t_independence": tind, "max_defect": defect, "coherence": coherence,
               "map_defect": map_defect, "deviation_from_g": float(np.max(np.abs(a - g(P))))}
    checks = [_check("t_independence", tind <= cfg["tind_tol"], tind, cfg["tind_tol"]),
              _check("defect", defect <= cfg["defect_tol"], defect, cfg["defect_tol"]),
              _check("coherence", coherence <= cfg["coherence_tol"], coherence, cfg["coherence_tol"]),
              _check("map_symplectic", map_defect <= cfg["map_defect_tol"], map_defect,
                     cfg["map_defect_tol"])]
    ts = np.linspace(0, 1, 41)
    path = np.array([liouville.extend_embedding(g, P[0] * s, shell, dt=cfg["dt"]) for s in ts[1:]])
    art = {"trajectory": (ts[1:], path, np.linalg.norm(path, axis=1)),
           "svg": [("extended ray", path), ("ray", P[0] * ts[1:, None])]}
    return outputs, checks, art


def _duality_check(cfg):
    rng = np.random.default_rng(cfg["seed"])
    d = 2 * cfg["n"]
    P, V = rng.normal(size=(cfg["samples"], d)), rng.normal(size=(cfg["samples"], d))
    resid = float(np.max(np.abs(liouville.interior_product_radial(P, V) - liouville.lambda0(P, V))))
    factors = liouville.dlambda0_factor(cfg["samples"], cfg["n"], rng)
    med = float(np.median(factors))
    outputs = {"max_duality_residual": resid, "dlambda0_factor_median": med,
               "dlambda0_factor_min": float(np.min(factors)),
               "dlambda0_factor_max": float(np.max(factors))}
    checks = [_check("duality", resid <= cfg["tol"], resid, cfg["tol"]),
              _check("factor", abs(med + 2.0) <= cfg["factor_tol"], med, cfg["factor_tol"])]
    return outputs, checks, {}


def _volume_check(cfg):
    rows, ok = [], True
    for R in cfg["R_values"]:
        for r in cfg["r_values"]:
            v = liouville.volume_obstruction(R, r)
            expect = liouville.IMPOSSIBLE if R > r else liouville.COMPATIBLE
            ok &= v["verdict"] == expect
            rows.append(v)
    rng = np.random.default_rng(cfg["seed"])
    mc = liouville.monte_carlo_ball_volume(1.0, samples=cfg["mc_samples"], rng=rng)
    rel = abs(mc - liouville.ball_volume(1.0)) / liouville.ball_volume(1.0)
    outputs = {"grid": rows, "monte_carlo_unit_ball": mc, "formula_unit_ball": liouville.ball_volume(1.0)}
    checks = [_check("verdicts", ok), _check("monte_carlo", rel <= cfg["mc_rel_tol"], rel, cfg["mc_rel_tol"])]
    return outputs, checks, {}


SCENARIOS = {
    "trace-leaf": _trace_leaf,
    "build-hammer": _build_hammer,
    "verify-hammer": _verify_hammer,
    "verify-one-sided": _verify_one_sided,
    "displace": _displace,
    "hopf-area": _hopf_area,
    "scaling-law": _scaling_law,
    "extend-map": _extend_map,
    "duality-check": _duality_check,
    "volume-check": _volume_check,
}


def run(command, cfg):
    """Execute a resolved scenario; returns ``(result, exit_status)`` after writing artifacts."""
    start = time.perf_counter()
    outdir = cfg["output_dir"]
    artifacts, error = [], None
    try:
        outputs, checks, art = SCENARIOS[command](cfg)
    except DOMAIN_ERRORS as exc:
        outputs, checks, art = {}, [_check("completed", False, detail=str(exc))], {}
        error = f"{type(exc).__name__}: {exc}"
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    if cfg["csv"] and "trajectory" in art:
        name = f"{command}.csv"
        write_csv(os.path.join(outdir, name), *art["trajectory"])
        artifacts.append(name)
    if cfg["svg"] and art.get("svg"):
        name = f"{command}.svg"
        write_svg(os.path.join(outdir, name), art["svg"], title=command)
        artifacts.append(name)
    passed = all(c["passed"] for c in checks)
    tolerances = {c["name"]: c["tolerance"] for c in checks if "tolerance" in c}
    result = {"command": command, "config": cfg, "outputs": outputs, "checks": checks,
              "tolerances": tolerances, "passed": passed, "error": error,
              "artifacts": sorted(artifacts + [f"{command}.json"]),
              "wall_time": time.perf_counter() - start}
    write_json(os.path.join(outdir, f"{command}.json"), result)
    return result, 0 if passed else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="charfol", description=__doc__.split("\n")[0])
    parser.add_argument("--print-schema", action="store_true",
                        help="print the JSON schema of result files and exit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", help="YAML or JSON scenario file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (YAML syntax, dotted keys)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--no-csv", action="store_true")
        p.add_argument("--no-svg", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print(json.dumps(RESULT_SCHEMA, indent=2, sort_keys=True))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        overrides = list(args.set)
        if args.no_csv:
            overrides.append("csv=false")
        if args.no_svg:
            overrides.append("svg=false")
        cfg = resolve_config(args.command, file_cfg, overrides, args.seed, args.out)
        result, status = run(args.command, cfg)
    except ConfigError as exc:
        print(f"charfol: config error: {exc}", file=sys.stderr)
        return 2
    summary = ", ".join(f"{c['name']}={'ok' if c['passed'] else 'FAIL'}" for c in result["checks"])
    print(f"{args.command}: {'PASS' if status == 0 else 'FAIL'} ({summary})")
    return status
