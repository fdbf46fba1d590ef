"""Deterministic artifact writers: result JSON, trajectory CSV, static SVG.

Every file is written to a temporary sibling and renamed into place, so a
reader never observes a half-written artifact.
"""

import csv
import io
import json
import os
import tempfile

import numpy as np

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "charfol result",
    "type": "object",
    "required": ["command", "config", "outputs", "checks", "tolerances", "passed",
                 "wall_time", "artifacts"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "outputs": {"type": "object"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "value": {},
                    "tolerance": {},
                    "detail": {"type": "string"},
                },
            },
        },
        "tolerances": {"type": "object"},
        "passed": {"type": "boolean"},
        "error": {"type": ["string", "null"]},
        "wall_time": {"type": "number", "minimum": 0},
        "artifacts": {"type": "array", "items": {"type": "string"}},
    },
}


def to_jsonable(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write(path, dumps(obj))


def trajectory_csv(times, points, energy):
    """CSV text with columns ``t, x1, y1, ..., xn, yn, H``."""
    points = np.asarray(points, dtype=float)
    n = points.shape[1] // 2
    header = ["t"] + [f"{c}{i}" for i in range(1, n + 1) for c in ("x", "y")] + ["H"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for t, p, h in zip(times, points, energy):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in p] + [repr(float(h))])
    return buf.getvalue()


def write_csv(path, times, points, energy):
    atomic_write(path, trajectory_csv(times, points, energy))


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def projection_svg(series, axes=(0, 1), size=400, title=""):
    """Static SVG of 2-d coordinate projections.

    ``series`` is a list of ``(label, points)``; each becomes a polyline of
    the coordinates selected by ``axes``.
    """
    arrays = [np.asarray(P, dtype=float)[:, list(axes)] for _, P in series]
    allpts = np.concatenate(arrays) if arrays else np.zeros((1, 2))
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(np.max(hi - lo), 1e-12))
    pad = 20.0
    scale = (size - 2 * pad) / span

    def xy(p):
        return pad + (p[0] - lo[0]) * scale, size - pad - (p[1] - lo[1]) * scale

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    if title:
        lines.append(f'<text x="{pad}" y="14" font-size="12">{title}</text>')
    for k, ((label, _), P) in enumerate(zip(series, arrays)):
        coords = " ".join("%.3f,%.3f" % xy(p) for p in P)
        color = _PALETTE[k % len(_PALETTE)]
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" '
                     f'points="{coords}"><title>{label}</title></polyline>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(path, series, axes=(0, 1), title=""):
    atomic_write(path, projection_svg(series, axes, title=title))
