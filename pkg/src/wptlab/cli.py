"""Command line experiment harness.

Usage::

    wptlab <subcommand> --config run.json [--out DIR] [--quiet]

The config is a JSON document with the sections ``manifold``, ``scenario``,
``discretization``, ``experiment``, ``tolerances`` and ``output``; every
section is optional and missing keys take the defaults in ``DEFAULTS``.
Each run writes ``results.csv`` and ``summary.json`` (with the resolved
config) to the output directory.  A key in ``tolerances`` names a results
column; any row whose value exceeds it fails the run.

Exit codes: 0 all tolerances met, 1 a tolerance failed, 2 invalid config.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import manifold as mf
from . import scenarios
from .delta_scheme import DeltaGeodesic, run_delta_scheme
from .errors import WPTError
from .geodesic import continuity_residual, generate_geodesic, potential_normalization, regularity_report
from .measure import jacobian_det, otto_norm
from .qstep import compare_to_pde, run_scheme, scheme_diagnostics
from .transport_pde import pairing_series, solve_parallel_pde
from .weak_residual import default_battery, weak_defects

SUBCOMMANDS = (
    "geodesic-check",
    "pde-transport",
    "scheme-transport",
    "compare",
    "delta-transport",
    "weak-residual",
    "sweep",
)

DEFAULTS = {
    "manifold": {"tag": None, "resolution": None},
    "scenario": {"name": "s1-default", "eta1": None, "phi0_scale": 1.0},
    "discretization": {"T": 1000, "Q": [8, 16, 32, 64], "inversion_tol": 1e-12},
    "experiment": {"check_times": 11, "source": "pde", "diagnostics": False,
                   "row_stride": 10},
    "tolerances": {},
    "output": {"dir": "wptlab-out", "fields": False},
}

_NUM = {"type": "number"}
SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "manifold": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tag": {"enum": ["circle", "torus2", "sphere2", None]},
                "resolution": {"type": ["integer", "null"], "minimum": 16, "multipleOf": 2},
            },
        },
        "scenario": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "name": {"enum": list(scenarios.SCENARIOS)},
                "eta1": {"type": ["string", "null"]},
                "phi0_scale": _NUM,
            },
        },
        "discretization": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "T": {"type": "integer", "minimum": 20},
                "Q": {
                    "oneOf": [
                        {"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                    ]
                },
                "inversion_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "experiment": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "check_times": {"type": "integer", "minimum": 2},
                "source": {"enum": ["pde", "scheme"]},
                "diagnostics": {"type": "boolean"},
                "row_stride": {"type": "integer", "minimum": 1},
            },
        },
        "tolerances": {"type": "object", "additionalProperties": _NUM},
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "fields": {"type": "boolean"}},
        },
    },
}


class ConfigError(ValueError):
    pass


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and fill in defaults."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {path}: {exc.message}") from None
    cfg = copy.deepcopy(DEFAULTS)
    for section, values in raw.items():
        cfg[section].update(values)
    name = cfg["scenario"]["name"]
    if name in scenarios.GRID_SCENARIOS:
        tag = "circle" if name == "s1-default" else "torus2"
        if cfg["manifold"]["resolution"] is None:
            cfg["manifold"]["resolution"] = scenarios.DEFAULT_RESOLUTION[name]
    else:
        tag = "sphere2" if name == "sphere-delta-default" else "torus2"
        cfg["manifold"]["resolution"] = None if tag == "sphere2" else 64
    if cfg["manifold"]["tag"] not in (None, tag):
        raise ConfigError(f"scenario {name!r} lives on {tag}, not {cfg['manifold']['tag']}")
    cfg["manifold"]["tag"] = tag
    Q = cfg["discretization"]["Q"]
    cfg["discretization"]["Q"] = [Q] if isinstance(Q, int) else list(Q)
    return cfg


# ---------------------------------------------------------------------------
# experiment runners: each returns (rows, summary, fields)


def _grid_setup(cfg):
    name = cfg["scenario"]["name"]
    if name not in scenarios.GRID_SCENARIOS:
        raise ConfigError(f"this subcommand needs a grid scenario, got {name!r}")
    m, mu0, phi0, eta1 = scenarios.grid_scenario(
        name, cfg["manifold"]["resolution"], cfg["scenario"]["eta1"]
    )
    phi0 = cfg["scenario"]["phi0_scale"] * phi0
    path = generate_geodesic(mu0, phi0, cfg["discretization"]["T"], check_times=0)
    return m, path, eta1


def _geodesic_check(cfg):
    m, path, _ = _grid_setup(cfg)
    rows = []
    for t in np.linspace(0.0, 1.0, cfg["experiment"]["check_times"]):
        mu = path.density(t)
        rows.append({
            "t": t,
            "mass_error": abs(mu.mass - 1.0),
            "continuity_residual": continuity_residual(path, t),
            "potential_normalization": abs(potential_normalization(path, t)),
            "jacobian_min": float(jacobian_det(path.flow(t)[1]).min()),
        })
    summary = {"regularity": regularity_report(path),
               "jacobian_range_extended": list(path.jacobian_range())}
    fields = {"rho_1": path.density(1.0).values, "phi_0": path.potential(0.0)}
    return rows, summary, fields


def _pde(cfg, path, eta1):
    return solve_parallel_pde(path, eta1, "backward", check_drift=False)


def _pde_transport(cfg):
    m, path, eta1 = _grid_setup(cfg)
    sol = _pde(cfg, path, eta1)
    s = pairing_series(path, sol, sol)
    ref = s[-1]
    stride = cfg["experiment"]["row_stride"]
    rows = [
        {"t": t, "energy": s[j], "relative_drift": abs(s[j] - ref) / ref if ref else abs(s[j])}
        for j, t in enumerate(sol.times) if j % stride == 0 or j == len(sol.times) - 1
    ]
    drift = float(np.abs(s - ref).max() / ref) if ref else float(np.abs(s).max())
    summary = {"drift": drift, "grad_eta0_norm": otto_norm(path.density(0.0), sol.grad(0)),
               "grad_eta1_norm": otto_norm(path.density(1.0), sol.grad(len(s) - 1))}
    return rows, summary, {"eta_0": sol.eta[0], "eta_1": sol.eta[-1]}


def _scheme_runs(cfg, m, path, eta1):
    g1 = mf.grad(m, eta1)
    tol = cfg["discretization"]["inversion_tol"]
    for Q in cfg["discretization"]["Q"]:
        yield Q, run_scheme(path, g1, Q, tol=tol)


def _scheme_transport(cfg):
    m, path, eta1 = _grid_setup(cfg)
    rows, summary, fields = [], {}, {}
    for Q, out in _scheme_runs(cfg, m, path, eta1):
        for t, n in zip(out.times, out.unit_norms()):
            rows.append({"Q": Q, "t": t, "unit_norm": n, "norm_error": abs(n - 1.0) if out.input_norm else 0.0})
        entry = {"norm_drift": out.norm_drift(), "iterations": list(out.iterations),
                 "V0_norm": otto_norm(path.density(0.0), out.V0)}
        if cfg["experiment"]["diagnostics"]:
            entry["diagnostics"] = scheme_diagnostics(out).summary()
        summary[f"Q={Q}"] = entry
        for a in range(m.dim):
            fields[f"V0_Q{Q}_{'xy'[a]}"] = out.V0[a]
    return rows, summary, fields


def _compare(cfg, with_weak=False):
    m, path, eta1 = _grid_setup(cfg)
    sol = _pde(cfg, path, eta1)
    rows, fields = [], {}
    for Q, out in _scheme_runs(cfg, m, path, eta1):
        c = compare_to_pde(out, sol)
        row = {"Q": Q, "err_0": c["err_0"], "err_path": c["err_path"]}
        if with_weak:
            row["norm_drift"] = out.norm_drift()
            row["weak_residual"] = float(np.abs(
                weak_defects(path, out.fields, out.V0, out.V1, times=out.times)).max())
        rows.append(row)
    summary = {"grad_eta1_norm": otto_norm(path.density(1.0), mf.grad(m, eta1))}
    return rows, summary, fields


def _sweep(cfg):
    rows, summary, fields = _compare(cfg, with_weak=True)
    errs = [r["err_0"] for r in rows]
    summary["err_0_strictly_decreasing"] = bool(all(b < a for a, b in zip(errs, errs[1:])))
    return rows, summary, fields


def _weak_residual(cfg):
    m, path, eta1 = _grid_setup(cfg)
    battery = default_battery(m)
    if cfg["experiment"]["source"] == "pde":
        sol = _pde(cfg, path, eta1)
        V = np.array([sol.grad(j) for j in range(len(sol.times))])
        d = weak_defects(path, V, V[0], V[-1], battery, sol.times)
        sources = [("pde", d)]
    else:
        sources = []
        for Q, out in _scheme_runs(cfg, m, path, eta1):
            d = weak_defects(path, out.fields, out.V0, out.V1, battery, out.times)
            sources.append((f"Q={Q}", d))
    rows = []
    for label, d in sources:
        for f, v in zip(battery, d):
            rows.append({"source": label, "power": f.power,
                         "k": " ".join(str(k) for k in f.k), "kind": f.kind, "defect": abs(v)})
    summary = {label: float(np.abs(d).max()) for label, d in sources}
    return rows, summary, {}


def _delta_transport(cfg):
    m, x, v, nu = scenarios.delta_scenario(cfg["scenario"]["name"])
    rows = []
    for Q in cfg["discretization"]["Q"]:
        r = run_delta_scheme(DeltaGeodesic(m, x, v, Q), nu)
        rows.append({"Q": Q, "err": r["err"], "second_moment_0": r["nu0"].second_moment()})
    return rows, {"second_moment_1": nu.second_moment()}, {}


RUNNERS = {
    "geodesic-check": _geodesic_check,
    "pde-transport": _pde_transport,
    "scheme-transport": _scheme_transport,
    "compare": _compare,
    "delta-transport": _delta_transport,
    "weak-residual": _weak_residual,
    "sweep": _sweep,
}


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, rows):
    cols = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])


def write_field(path: Path, m, values):
    """One row per node: coordinates then value."""
    cols = ["x", "y"][: m.dim] + ["value"]
    coords = [m.nodes[a].ravel() for a in range(m.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in zip(*coords, np.asarray(values).ravel()):
            w.writerow([_fmt(float(v)) for v in row])


def check_tolerances(rows, tolerances):
    """Rows whose declared columns exceed their tolerance."""
    failures = []
    for key, tol in tolerances.items():
        if rows and key not in rows[0]:
            raise ConfigError(f"tolerance {key!r} names no results column")
        for i, r in enumerate(rows):
            if not r[key] <= tol:
                failures.append({"row": i, "column": key, "value": float(r[key]), "tolerance": tol})
    return failures


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def run_experiment(subcommand, cfg, out_dir=None):
    """Run one subcommand on a resolved config; returns ``(summary, failures)``."""
    rows, summary, fields = RUNNERS[subcommand](cfg)
    failures = check_tolerances(rows, cfg["tolerances"])
    out = Path(out_dir or cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "results.csv", rows)
    if cfg["output"]["fields"] and fields:
        m = mf.ManifoldKind(cfg["manifold"]["tag"], cfg["manifold"]["resolution"])
        (out / "fields").mkdir(exist_ok=True)
        for name, values in fields.items():
            write_field(out / "fields" / f"{name}.csv", m, values)
    doc = {"subcommand": subcommand, "config": cfg, "results": summary,
           "failures": failures, "passed": not failures}
    with open(out / "summary.json", "w", newline="\n") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return rows, summary, failures


def build_parser():
    p = argparse.ArgumentParser(prog="wptlab", description="Parallel transport experiments in Wasserstein space")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        cfg = resolve_config(raw)
        rows, summary, failures = run_experiment(args.subcommand, cfg, args.out)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"wptlab: {exc}", file=sys.stderr)
        return 2
    except WPTError as exc:
        print(f"wptlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        for r in rows[:50]:
            print("  ".join(f"{k}={v:.4e}" if isinstance(v, float) else f"{k}={v}"
                            for k, v in r.items()))
        if len(rows) > 50:
            print(f"... {len(rows) - 50} more rows")
    for f in failures:
        print(f"FAIL row {f['row']}: {f['column']} = {f['value']:.6e} > {f['tolerance']:.3e}",
              file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
