"""Scenario-driven command line: evolve | ring | current | shear | classical.

A run is described by a single JSON config; unknown keys are rejected so a
config cannot silently drift from what the code understands.  Every output
file embeds the canonical config echo and its SHA-256 hash; re-running the
echoed config reproduces the outputs byte for byte, independent of the
thread count.

Exit codes: 0 ok, 2 config error, 3 numerical-validity error in strict mode.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import ClassicalDensity, classical_shear_measure, liouville_pullback
from .current import current_general, stagnation_points, tangentiality_stat
from .diagnostics import (detect_special_states, negativity, pi_series,
                          recurrence_time, ring_probability, ring_trace,
                          series_deviation)
from .fields import PhaseGrid, default_grid
from .io import (canonical_json, write_events_json, write_field_binary,
                 write_json, write_ring_csv, write_scalar_csv,
                 write_series_csv, write_vector_csv)
from .states import (KerrParams, StateError, coherent_state, density_matrix,
                     evolve, fock_superposition, squeezed_vacuum)
from .wigner import wigner_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _as_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) for v in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"{where} must be a number or [re, im] pair")


def _number(section: dict, key: str, where: str, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key '{key}' in {where}")
        return default
    v = section[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be a number")
    return float(v)


def load_config(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return normalize_config(raw)


def normalize_config(raw: dict) -> dict:
    """Validate, fill defaults and return the canonical config document."""
    _check_keys(raw, {"state", "cutoff", "cutoff_tol", "params", "grid",
                      "times", "sigma", "ring", "shear", "classical",
                      "strict", "format", "quiver_step"}, "config")

    cfg: dict = {}
    state = raw.get("state")
    if not isinstance(state, dict) or "kind" not in state:
        raise ConfigError("config.state must be an object with a 'kind'")
    kind = state["kind"]
    if kind == "coherent":
        _check_keys(state, {"kind", "alpha"}, "config.state")
        if "alpha" not in state:
            raise ConfigError("coherent state needs 'alpha'")
        a = _as_complex(state["alpha"], "config.state.alpha")
        cfg["state"] = {"kind": kind, "alpha": [a.real, a.imag]}
    elif kind == "squeezed":
        _check_keys(state, {"kind", "zeta"}, "config.state")
        cfg["state"] = {"kind": kind,
                        "zeta": _number(state, "zeta", "config.state")}
    elif kind == "fock":
        _check_keys(state, {"kind", "n"}, "config.state")
        n = state.get("n")
        if not isinstance(n, int) or n < 0:
            raise ConfigError("config.state.n must be a nonnegative integer")
        cfg["state"] = {"kind": kind, "n": n}
    elif kind == "fock_superposition":
        _check_keys(state, {"kind", "terms"}, "config.state")
        terms = state.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("config.state.terms must be a nonempty list")
        norm_terms = []
        for item in terms:
            if not (isinstance(item, list) and len(item) == 2
                    and isinstance(item[0], int)):
                raise ConfigError("each term must be [n, amplitude]")
            amp = _as_complex(item[1], "config.state.terms amplitude")
            norm_terms.append([item[0], [amp.real, amp.imag]])
        cfg["state"] = {"kind": kind, "terms": norm_terms}
    else:
        raise ConfigError(f"unknown state kind {kind!r}")

    cutoff = raw.get("cutoff", "auto")
    if cutoff != "auto" and not (isinstance(cutoff, int) and cutoff >= 0):
        raise ConfigError("config.cutoff must be 'auto' or a nonnegative integer")
    cfg["cutoff"] = cutoff
    cfg["cutoff_tol"] = _number(raw, "cutoff_tol", "config", default=1e-12)

    pr = raw.get("params", {})
    if not isinstance(pr, dict):
        raise ConfigError("config.params must be an object")
    _check_keys(pr, {"mass", "spring", "hbar", "lambda2_p", "lambda2_x"},
                "config.params")
    lam_p = _number(pr, "lambda2_p", "config.params", default=0.0)
    cfg["params"] = {
        "mass": _number(pr, "mass", "config.params", default=1.0),
        "spring": _number(pr, "spring", "config.params", default=1.0),
        "hbar": _number(pr, "hbar", "config.params", default=1.0),
        "lambda2_p": lam_p,
        "lambda2_x": _number(pr, "lambda2_x", "config.params", default=lam_p),
    }

    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("config.grid must be an object")
    if {"x_min", "x_max", "p_min", "p_max"} & set(grid):
        _check_keys(grid, {"x_min", "x_max", "p_min", "p_max", "n_x", "n_p"},
                    "config.grid")
        cfg["grid"] = {k: (_number(grid, k, "config.grid") if k[0] != "n"
                           else int(grid[k])) for k in
                       ("x_min", "x_max", "p_min", "p_max", "n_x", "n_p")}
    else:
        _check_keys(grid, {"half_width", "n"}, "config.grid")
        n = grid.get("n", 257)
        if not isinstance(n, int):
            raise ConfigError("config.grid.n must be an integer")
        cfg["grid"] = {"n": n}
        if "half_width" in grid:
            cfg["grid"]["half_width"] = _number(grid, "half_width", "config.grid")

    times = raw.get("times", [0.0])
    if isinstance(times, dict):
        _check_keys(times, {"start", "stop", "num"}, "config.times")
        num = times.get("num")
        if not isinstance(num, int) or num < 2:
            raise ConfigError("config.times.num must be an integer >= 2")
        cfg["times"] = {"start": _number(times, "start", "config.times"),
                        "stop": _number(times, "stop", "config.times"),
                        "num": num}
    elif isinstance(times, list) and times and all(
            isinstance(t, (int, float)) for t in times):
        cfg["times"] = [float(t) for t in times]
    else:
        raise ConfigError("config.times must be a list of numbers or {start, stop, num}")

    sigma = _number(raw, "sigma", "config", default=0.0)
    if not 0.0 <= sigma <= 1.0:
        raise ConfigError("config.sigma must lie in [0, 1]")
    cfg["sigma"] = sigma

    ring = raw.get("ring", {})
    _check_keys(ring, {"radius", "n_theta", "corotating"}, "config.ring")
    n_theta = ring.get("n_theta", 512)
    if not isinstance(n_theta, int) or n_theta < 64:
        raise ConfigError("config.ring.n_theta must be an integer >= 64")
    cfg["ring"] = {"radius": _number(ring, "radius", "config.ring", default=1.0),
                   "n_theta": n_theta,
                   "corotating": bool(ring.get("corotating", True))}

    shear = raw.get("shear", {})
    _check_keys(shear, {"smooth_window", "baseline_window"}, "config.shear")
    cfg["shear"] = {"smooth_window": int(shear.get("smooth_window", 5)),
                    "baseline_window": int(shear.get("baseline_window", 25))}

    classical = raw.get("classical", {})
    _check_keys(classical, {"center", "sigma2"}, "config.classical")
    cfg["classical"] = {}
    if "center" in classical:
        c = classical["center"]
        if not (isinstance(c, list) and len(c) == 2):
            raise ConfigError("config.classical.center must be [x0, p0]")
        cfg["classical"]["center"] = [float(c[0]), float(c[1])]
    if "sigma2" in classical:
        s2 = classical["sigma2"]
        if isinstance(s2, (int, float)):
            s2 = [s2, s2]
        if not (isinstance(s2, list) and len(s2) == 2):
            raise ConfigError("config.classical.sigma2 must be a number or [sx2, sp2]")
        cfg["classical"]["sigma2"] = [float(s2[0]), float(s2[1])]

    cfg["strict"] = bool(raw.get("strict", False))
    fmt = raw.get("format", "csv")
    if fmt not in ("csv", "binary"):
        raise ConfigError("config.format must be 'csv' or 'binary'")
    cfg["format"] = fmt
    qs = raw.get("quiver_step", 0)
    if not isinstance(qs, int) or qs < 0:
        raise ConfigError("config.quiver_step must be a nonnegative integer")
    cfg["quiver_step"] = qs
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------

def build_state(cfg: dict):
    st = cfg["state"]
    cutoff = None if cfg["cutoff"] == "auto" else cfg["cutoff"]
    tol = cfg["cutoff_tol"]
    if st["kind"] == "coherent":
        return coherent_state(complex(*st["alpha"]), cutoff, tol)
    if st["kind"] == "squeezed":
        return squeezed_vacuum(st["zeta"], cutoff, tol)
    if st["kind"] == "fock":
        return fock_superposition([(st["n"], 1.0)], cutoff)
    return fock_superposition(
        [(n, complex(*amp)) for n, amp in st["terms"]], cutoff)


def build_params(cfg: dict) -> KerrParams:
    p = cfg["params"]
    return KerrParams(mass=p["mass"], spring=p["spring"], hbar=p["hbar"],
                      lambda2_p=p["lambda2_p"], lambda2_x=p["lambda2_x"])


def _amplitude_scale(cfg: dict) -> float:
    st = cfg["state"]
    if st["kind"] == "coherent":
        return abs(complex(*st["alpha"]))
    if st["kind"] == "squeezed":
        return float(np.exp(abs(st["zeta"])))
    if st["kind"] == "fock":
        return float(np.sqrt(st["n"]))
    return float(np.sqrt(max(n for n, _ in st["terms"])))


def build_grid(cfg: dict) -> PhaseGrid:
    g = cfg["grid"]
    if "x_min" in g:
        return PhaseGrid(g["x_min"], g["x_max"], g["p_min"], g["p_max"],
                         g["n_x"], g["n_p"])
    hbar = cfg["params"]["hbar"]
    if "half_width" in g:
        return PhaseGrid.symmetric(g["half_width"], g["n"])
    return default_grid(_amplitude_scale(cfg), hbar, g["n"])


def build_times(cfg: dict) -> np.ndarray:
    t = cfg["times"]
    if isinstance(t, dict):
        return np.linspace(t["start"], t["stop"], t["num"])
    return np.asarray(t, dtype=float)


def _meta(cfg: dict, **extra) -> dict:
    out = {"config_hash": config_hash(cfg), "config": cfg,
           "version": __version__}
    out.update(extra)
    return out


def _write_field(fld, path_base: Path, cfg: dict, meta: dict):
    if cfg["format"] == "binary":
        write_field_binary(fld, path_base.with_suffix(".bin"), meta)
    elif hasattr(fld, "values"):
        write_scalar_csv(fld, path_base.with_suffix(".csv"), meta)
    else:
        write_vector_csv(fld, path_base.with_suffix(".csv"), meta)


class StrictModeViolation(RuntimeError):
    pass


def _strict_check(cfg: dict, fld, context: str):
    if fld.warnings:
        msg = f"{context}: " + "; ".join(fld.warnings)
        if cfg["strict"]:
            raise StrictModeViolation(msg)
        print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_evolve(cfg: dict, out: Path, threads: int) -> None:
    state = build_state(cfg)
    params = build_params(cfg)
    grid = build_grid(cfg)
    times = build_times(cfg)
    summary = []
    for idx, t in enumerate(times):
        W = wigner_grid(density_matrix(evolve(state, float(t), params)),
                        grid, params.hbar)
        _strict_check(cfg, W, f"W at t={t}")
        meta = _meta(cfg, t=float(t))
        _write_field(W, out / f"W_{idx:03d}", cfg, meta)
        w_min, neg_vol = negativity(W)
        summary.append({"index": idx, "t": float(t), "min_W": w_min,
                        "negative_volume": neg_vol,
                        "warnings": list(W.warnings)})
    write_json({"meta": _meta(cfg), "negativity": summary}, out / "negativity.json")


def cmd_ring(cfg: dict, out: Path, threads: int) -> None:
    state = build_state(cfg)
    params = build_params(cfg)
    grid = build_grid(cfg)
    times = build_times(cfg)
    r = cfg["ring"]["radius"]
    n_theta = cfg["ring"]["n_theta"]
    corotating = cfg["ring"]["corotating"]
    omega = 1.0 + params.lambda2_p * r * r
    summary = []
    for idx, t in enumerate(times):
        W = wigner_grid(density_matrix(evolve(state, float(t), params)),
                        grid, params.hbar)
        _strict_check(cfg, W, f"W at t={t}")
        angle = omega * float(t) if corotating else None
        tr = ring_trace(W, r, n_theta, subtract_classical_phase=angle, t=float(t))
        write_ring_csv(tr, out / f"ring_{idx:03d}.csv", _meta(cfg, t=float(t)))
        summary.append({"index": idx, "t": float(t),
                        "ring_probability": ring_probability(W, r, n_theta)})
    write_json({"meta": _meta(cfg), "rings": summary}, out / "ring_probability.json")


def cmd_current(cfg: dict, out: Path, threads: int) -> None:
    from .diagnostics import vorticity

    state = build_state(cfg)
    params = build_params(cfg)
    grid = build_grid(cfg)
    times = build_times(cfg)
    reports = []
    for idx, t in enumerate(times):
        W = wigner_grid(density_matrix(evolve(state, float(t), params)),
                        grid, params.hbar)
        _strict_check(cfg, W, f"W at t={t}")
        bundle = current_general(W, params, cfg["sigma"])
        meta = _meta(cfg, t=float(t), sigma=cfg["sigma"])
        _write_field(W, out / f"W_{idx:03d}", cfg, meta)
        _write_field(bundle.total, out / f"J_{idx:03d}", cfg, meta)
        _write_field(bundle.classical, out / f"j_classical_{idx:03d}", cfg, meta)
        _write_field(bundle.quantum, out / f"J_quantum_{idx:03d}", cfg, meta)
        delta = vorticity(bundle.quantum)
        _write_field(delta, out / f"delta_{idx:03d}", cfg, meta)
        if cfg["quiver_step"] > 1:
            write_vector_csv(bundle.total, out / f"J_quiver_{idx:03d}.csv",
                             meta, step=cfg["quiver_step"])
        rep = stagnation_points(bundle.total)
        reports.append({
            "index": idx, "t": float(t),
            "stagnation_points": [list(pt) for pt in rep.points],
            "stagnation_lines": rep.lines,
            "degenerate": rep.degenerate,
            "tangentiality": tangentiality_stat(bundle.total),
        })
    write_json({"meta": _meta(cfg, sigma=cfg["sigma"]), "reports": reports},
               out / "stagnation.json")


def cmd_shear(cfg: dict, out: Path, threads: int) -> None:
    state = build_state(cfg)
    params = build_params(cfg)
    grid = build_grid(cfg)
    times = build_times(cfg)
    series = pi_series(state, params, times, grid, sigma=cfg["sigma"],
                       smooth_window=cfg["shear"]["smooth_window"],
                       n_workers=threads)
    deviation = series_deviation(series, cfg["shear"]["baseline_window"])
    events = detect_special_states(series, cfg["shear"]["baseline_window"]) \
        if len(times) >= 3 * cfg["shear"]["baseline_window"] else []
    meta = _meta(cfg, recurrence_time=(recurrence_time(params)
                                       if params.lambda2_p else None))
    write_series_csv(series, deviation, out / "shear_series.csv", meta)
    write_events_json(events, out / "events.json", meta)


def cmd_classical(cfg: dict, out: Path, threads: int) -> None:
    params = build_params(cfg)
    grid = build_grid(cfg)
    times = build_times(cfg)
    cl = cfg["classical"]
    if "center" in cl:
        sigma2 = tuple(cl.get("sigma2", (params.hbar / 2, params.hbar / 2)))
        rho0 = ClassicalDensity.gaussian(cl["center"][0], cl["center"][1],
                                         params, sigma2)
    elif cfg["state"]["kind"] == "coherent":
        rho0 = ClassicalDensity.twin_of_coherent(
            complex(*cfg["state"]["alpha"]), params)
    else:
        raise ConfigError("classical run needs config.classical.center or a "
                          "coherent state to twin")
    measures = []
    for idx, t in enumerate(times):
        rho = liouville_pullback(rho0, float(t), grid)
        _write_field(rho, out / f"classical_{idx:03d}", cfg, _meta(cfg, t=float(t)))
        measures.append(classical_shear_measure(rho, params))
    fit = {}
    if len(times) >= 3:
        coeffs, residuals = np.polyfit(times, measures, 1, full=True)[:2]
        ss_res = float(residuals[0]) if len(residuals) else 0.0
        ss_tot = float(np.sum((np.asarray(measures) - np.mean(measures)) ** 2))
        fit = {"slope": float(coeffs[0]), "intercept": float(coeffs[1]),
               "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0}
    lines = ["t,shear_measure\n"]
    for t, m in zip(times, measures):
        lines.append(f"{format(float(t), '.17g')},{format(float(m), '.17g')}\n")
    (out / "classical_shear_series.csv").write_bytes(
        ("# " + canonical_json(_meta(cfg)) + "\n" + "".join(lines)).encode())
    write_json({"meta": _meta(cfg), "measures": measures, "linear_fit": fit},
               out / "classical_summary.json")


COMMANDS = {
    "evolve": cmd_evolve,
    "ring": cmd_ring,
    "current": cmd_current,
    "shear": cmd_shear,
    "classical": cmd_classical,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kerrphase",
        description="Phase-space dynamics of quantum Kerr oscillators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads, 0 = auto")
        p.add_argument("--format", choices=["csv", "binary"], default=None,
                       help="override config output format")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.format:
            cfg["format"] = args.format
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        COMMANDS[args.command](cfg, out, threads)
    except StrictModeViolation as exc:
        print(f"numerical-validity error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, StateError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
