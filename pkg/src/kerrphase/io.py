"""Serialization of fields, ring traces and shear series.

CSV files carry '#'-prefixed JSON metadata lines, a column header, and
numbers printed with 17 significant digits, '.' decimal separator and LF
line endings, so identical runs produce byte-identical files.  The binary
format is a one-line self-describing JSON header followed by row-major
float64 little-endian payloads.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import PhaseGrid, ScalarField, VectorField


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _grid_meta(grid: PhaseGrid) -> dict:
    return {
        "x_min": grid.x_min, "x_max": grid.x_max,
        "p_min": grid.p_min, "p_max": grid.p_max,
        "n_x": grid.n_x, "n_p": grid.n_p,
    }


def _meta_lines(meta: dict | None) -> str:
    if not meta:
        return ""
    return "# " + canonical_json(meta) + "\n"


def write_scalar_csv(fld: ScalarField, path, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta.setdefault("grid", _grid_meta(fld.grid))
    meta.setdefault("label", fld.label)
    if fld.warnings:
        meta["warnings"] = list(fld.warnings)
    x, p = fld.grid.x, fld.grid.p
    lines = [_meta_lines(meta), "x,p,value\n"]
    for i in range(fld.grid.n_x):
        xi = _fmt(x[i])
        row = fld.values[i]
        for j in range(fld.grid.n_p):
            lines.append(f"{xi},{_fmt(p[j])},{_fmt(row[j])}\n")
    Path(path).write_bytes("".join(lines).encode())


def write_vector_csv(vec: VectorField, path, meta: dict | None = None,
                     step: int = 1) -> None:
    """Vector field as x,p,fx,fp rows; step > 1 yields the quiver-style
    downsampled export (every step-th node per axis)."""
    meta = dict(meta or {})
    meta.setdefault("grid", _grid_meta(vec.grid))
    meta.setdefault("label", vec.label)
    if step > 1:
        meta["downsample_step"] = step
    x, p = vec.grid.x, vec.grid.p
    lines = [_meta_lines(meta), "x,p,fx,fp\n"]
    for i in range(0, vec.grid.n_x, step):
        xi = _fmt(x[i])
        for j in range(0, vec.grid.n_p, step):
            lines.append(
                f"{xi},{_fmt(p[j])},{_fmt(vec.fx[i, j])},{_fmt(vec.fp[i, j])}\n"
            )
    Path(path).write_bytes("".join(lines).encode())


def write_field_binary(fld, path, meta: dict | None = None) -> None:
    """JSON header line + row-major float64 little-endian payload(s)."""
    is_vector = isinstance(fld, VectorField)
    arrays = [fld.fx, fld.fp] if is_vector else [fld.values]
    header = {
        "format": "kerrphase-field-v1",
        "kind": "vector" if is_vector else "scalar",
        "label": fld.label,
        "grid": _grid_meta(fld.grid),
        "dtype": "<f8",
        "order": "C",
        "components": ["fx", "fp"] if is_vector else ["values"],
        "meta": meta or {},
    }
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    Path(path).write_bytes(canonical_json(header).encode() + b"\n" + payload)


def read_field_binary(path):
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    if header.get("format") != "kerrphase-field-v1":
        raise ValueError(f"{path}: not a kerrphase binary field file")
    gm = header["grid"]
    grid = PhaseGrid(gm["x_min"], gm["x_max"], gm["p_min"], gm["p_max"],
                     gm["n_x"], gm["n_p"])
    count = gm["n_x"] * gm["n_p"]
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    if header["kind"] == "vector":
        fx = data[:count].reshape(gm["n_x"], gm["n_p"])
        fp = data[count:2 * count].reshape(gm["n_x"], gm["n_p"])
        return VectorField(grid, fx, fp, label=header.get("label", ""),
                           meta=header.get("meta", {}))
    vals = data[:count].reshape(gm["n_x"], gm["n_p"])
    return ScalarField(grid, vals, label=header.get("label", ""),
                       meta=header.get("meta", {}))


def write_ring_csv(trace, path, meta: dict | None = None) -> None:
    """Columns: theta, minus_theta_shifted (the clockwise plotting axis,
    after any co-rotating shift), value."""
    meta = dict(meta or {})
    meta.setdefault("radius", trace.radius)
    if trace.t is not None:
        meta.setdefault("t", trace.t)
    if trace.corotating_angle is not None:
        meta.setdefault("corotating_angle", trace.corotating_angle)
    lines = [_meta_lines(meta), "theta,minus_theta_shifted,value\n"]
    for th, v in zip(trace.thetas, trace.values):
        lines.append(f"{_fmt(th)},{_fmt(-th)},{_fmt(v)}\n")
    Path(path).write_bytes("".join(lines).encode())


def write_series_csv(series, deviation, path, meta: dict | None = None) -> None:
    lines = [_meta_lines(dict(meta or {})), "t,pi,smoothed,deviation\n"]
    for t, v, s, d in zip(series.times, series.pi_values, series.smoothed, deviation):
        lines.append(f"{_fmt(t)},{_fmt(v)},{_fmt(s)},{_fmt(d)}\n")
    Path(path).write_bytes("".join(lines).encode())


def write_events_json(events, path, meta: dict | None = None) -> None:
    doc = {
        "meta": meta or {},
        "events": [
            {"time": e.time, "kind": e.kind, "score": e.score,
             "fraction": {"p": e.fraction[0], "q": e.fraction[1]}}
            for e in events
        ],
    }
    Path(path).write_bytes((json.dumps(doc, sort_keys=True, indent=2) + "\n").encode())


def write_json(obj, path) -> None:
    Path(path).write_bytes((json.dumps(obj, sort_keys=True, indent=2) + "\n").encode())
