"""Config-driven command line front end.

    gbc run --config <path> [--output <path>] [--quiet]

The config is a single JSON object (schema shipped in gbc/schemas/); each
task writes one machine-readable report.  Exit codes: 0 all asserted
checks passed, 1 a check failed, 2 config error, 3 numerical failure
(degenerate metric, expression domain error, unwritable output).
"""

import argparse
import importlib.resources
import json
import sys
import time
from datetime import datetime, timezone

import jsonschema
import numpy as np

from . import __version__, backend, oracles, report
from .catalog import catalog, gbc_expected_value
from .errors import ConfigError, EvalError, GbcError, SingularMetricError
from .invariants import (bundle_at, homogeneity_check, identity_sample_ratios,
                         is_trivially_zero, lovelock_tensor,
                         pfaffian_invariant, raw_invariant, reduction_check)
from .quadrature import build_grid, cylinder_integral_check
from .variational import (DEFAULT_EPS, action_value, el_check, family_sweep,
                          random_perturbation, weight_forcing_check)


def _config_schema():
    text = importlib.resources.files("gbc").joinpath(
        "schemas/config.schema.json").read_text()
    return json.loads(text)


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, _config_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<top level>"
        raise ConfigError(f"config field {path}: {exc.message}") from exc


def _require(cfg, field):
    if field not in cfg:
        raise ConfigError(f"task {cfg.get('task')!r} requires the {field!r} field")
    return cfg[field]


def _manifold(cfg):
    spec = _require(cfg, "manifold")
    return catalog(spec["name"], spec.get("params"))


def _grid(m, cfg):
    return build_grid(m, cfg.get("resolution"))


# ---------------------------------------------------------------------------
# Task runners: cfg -> (results dict, passed bool, summary lines)
# ---------------------------------------------------------------------------

def _run_verify_gbc(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    tol = cfg.get("tolerance", 1e-6)
    grid = _grid(m, cfg)
    expected = gbc_expected_value(m, k)
    value = action_value(m, k, grid)
    abs_err = abs(value - expected)
    rel_err = abs_err / max(abs(expected), 1e-14)
    passed = abs_err <= tol
    results = {
        "manifold": m.name,
        "k": k,
        "resolution": list(grid.resolution),
        "nodes": len(grid),
        "value": float(value),
        "expected": expected,
        "provenance": "signature-weighted Euler characteristic "
                      f"(chi={m.expected_chi}, n_minus={m.signature[1]})",
        "abs_error": float(abs_err),
        "rel_error": float(rel_err),
        "tolerance": tol,
    }
    line = (f"verify-gbc {m.name} k={k}: value={value:.12g} "
            f"expected={expected:g} abs_err={abs_err:.3e}")
    return results, passed, [line]


def _run_identity(cfg):
    dims = _require(cfg, "dims")
    samples = cfg.get("samples", 200)
    seed = cfg.get("seed", 0)
    tol = cfg.get("tolerance", 1e-10)
    threshold = cfg.get("nonvanishing_threshold", 1e-3)
    rows = []
    lines = []
    passed = True
    for dim in dims:
        k = dim // 2
        ratios = identity_sample_ratios(dim, k, samples, seed)
        if dim == 2 * k:
            stat = float(ratios.max())
            ok = stat <= tol
            kind = "vanishing"
            lines.append(f"identity dim={dim} k={k}: max |S|/scale = {stat:.3e}"
                         f" (<= {tol:g}) {'ok' if ok else 'FAIL'}")
        else:
            stat = float(np.median(ratios))
            ok = stat > threshold
            kind = "nonvanishing"
            lines.append(f"identity dim={dim} k={k}: median |S|/scale = {stat:.3e}"
                         f" (> {threshold:g}) {'ok' if ok else 'FAIL'}")
        passed = passed and ok
        rows.append({"dim": dim, "k": k, "samples": samples, "kind": kind,
                     "statistic": stat, "passed": ok})
    results = {"cases": rows, "tolerance": tol,
               "nonvanishing_threshold": threshold, "seed": seed}
    return results, passed, lines


def _run_euler_lagrange(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    directions = cfg.get("directions", 5)
    seed = cfg.get("seed", 0)
    eps = tuple(cfg.get("eps", DEFAULT_EPS))
    tol = cfg.get("tolerance", 1e-8 if k == 0 else 1e-4)
    # "pairing" compares the finite difference with the Lovelock pairing;
    # "vanishing" asserts both are below tol in magnitude (dim = 2k case,
    # where the pairing is identically zero and a ratio is meaningless)
    mode = cfg.get("assert", "pairing")
    if mode not in ("pairing", "vanishing"):
        raise ConfigError("euler-lagrange assert must be 'pairing' or 'vanishing'")
    grid = _grid(m, cfg)
    rows = []
    lines = []
    passed = True
    for d in range(directions):
        h = random_perturbation(m, seed + d)
        rep = el_check(m, h, k, grid, eps=eps, tolerance=tol)
        if mode == "vanishing":
            ok = max(abs(rep.fd_value), abs(rep.pairing_value)) <= tol
        else:
            ok = rep.passed
        passed = passed and ok
        rows.append({
            "direction": rep.direction,
            "fd_value": rep.fd_value,
            "pairing_value": rep.pairing_value,
            "rel_error": rep.rel_error,
            "measured_ratio": rep.ratio,
            "eps_table": [{"eps": e, "central_difference": c}
                          for e, c in zip(rep.eps, rep.central)],
            "passed": ok,
        })
        lines.append(f"euler-lagrange {m.name} k={k} dir {d}: "
                     f"fd={rep.fd_value:+.8g} pairing={rep.pairing_value:+.8g} "
                     f"rel={rep.rel_error:.2e} {'ok' if ok else 'FAIL'}")
    results = {"manifold": m.name, "k": k, "assert": mode, "directions": rows,
               "tolerance": tol, "eps": list(eps), "seed": seed}
    return results, passed, lines


def _run_reduce(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    rep = reduction_check(m, k, npoints=cfg.get("points", 100),
                          seed=cfg.get("seed", 0),
                          tolerance=cfg.get("tolerance", 1e-10))
    results = {"manifold": m.name, "k": k, "points": rep.npoints,
               "max_dev_scalar": rep.max_dev_scalar,
               "max_dev_tensor": rep.max_dev_tensor,
               "tolerance": cfg.get("tolerance", 1e-10)}
    line = (f"reduce {m.name} k={k}: dP={rep.max_dev_scalar:.2e} "
            f"dS={rep.max_dev_tensor:.2e} {'ok' if rep.passed else 'FAIL'}")
    return results, rep.passed, [line]


def _run_homogeneity(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    lambdas = cfg.get("lambda", [2.0])
    rank = cfg.get("rank", "scalar")
    tol = cfg.get("tolerance", 1e-10)
    rows = []
    lines = []
    passed = True
    for lam in lambdas:
        rep = homogeneity_check(m, k, lam, rank, npoints=cfg.get("points", 20),
                                seed=cfg.get("seed", 0), tolerance=tol)
        passed = passed and rep.passed
        rows.append({"lambda": lam, "weight": rep.weight,
                     "max_deviation": rep.max_deviation, "passed": rep.passed})
        lines.append(f"homogeneity {m.name} k={k} rank={rank} lam={lam:g}: "
                     f"weight={rep.weight} dev={rep.max_deviation:.2e} "
                     f"{'ok' if rep.passed else 'FAIL'}")
    results = {"manifold": m.name, "k": k, "rank": rank, "cases": rows,
               "tolerance": tol}
    return results, passed, lines


def _run_weight(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    grid = _grid(m, cfg)
    rep = weight_forcing_check(m, k, grid, lambdas=cfg.get("lambda", [0.5, 2.0]),
                               tolerance=cfg.get("tolerance", 1e-10))
    results = {"manifold": m.name, "k": k, "dim": rep.dim,
               "expected_exponent": rep.expected_exponent,
               "max_deviation": rep.max_deviation,
               "scale_invariant": rep.scale_invariant,
               "tolerance": cfg.get("tolerance", 1e-10)}
    line = (f"weight {m.name} (n={rep.dim}, k={k}): exponent={rep.expected_exponent} "
            f"dev={rep.max_deviation:.2e} {'ok' if rep.passed else 'FAIL'}")
    return results, rep.passed, [line]


def _run_sweep(cfg, output=None, fmt=None):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    samples = _require(cfg, "sweep")
    tol = cfg.get("tolerance", 1e-6)
    mode = cfg.get("assert", "spread")
    grid = _grid(m, cfg)
    expected = None
    if mode == "expected" or (m.dim == 2 * k and m.expected_chi is not None):
        expected = gbc_expected_value(m, k)
    res = family_sweep(m, k, grid, samples, tolerance=tol, expected=expected,
                       assert_mode=mode)
    param_names = sorted(samples)
    rows = [{"params": r.params, "action": r.action, "degenerate": r.degenerate}
            for r in res.rows]
    results = {"manifold": m.name, "k": k, "parameters": param_names,
               "rows": rows, "spread": res.spread,
               "max_abs_deviation": res.max_abs_deviation,
               "expected": expected, "assert": mode, "tolerance": tol}
    if fmt == "csv" and output:
        report.write_sweep_csv(res.rows, param_names, output)
    lines = [f"sweep {m.name} k={k}: {len(rows)} members, spread={res.spread:.3e} "
             f"{'ok' if res.passed else 'FAIL'}"]
    return results, res.passed, lines


def _run_eval(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    point = _require(cfg, "point")
    if len(point) != m.dim:
        raise ConfigError(f"point needs {m.dim} coordinates for {m.name!r}")
    cb = bundle_at(m, point)
    s_tensor = lovelock_tensor(cb, k)
    results = {
        "manifold": m.name, "k": k, "point": [float(x) for x in point],
        "scalar_curvature": cb.scalar,
        "vol_density": cb.vol_density,
        "raw_invariant": raw_invariant(cb, k),
        "pfaffian_invariant": pfaffian_invariant(cb, k),
        "lovelock_tensor": [[float(v) for v in row]
                            for row in s_tensor.components],
        "trivially_zero": is_trivially_zero(k, m.dim),
    }
    line = (f"eval {m.name} k={k} at {tuple(point)}: s={cb.scalar:.8g} "
            f"P_k={results['pfaffian_invariant']:.8g}")
    return results, True, [line]


def _run_oracles(cfg):
    points = cfg.get("points", 20)
    seed = cfg.get("seed", 0)
    tol = cfg.get("tolerance", 1e-12)
    jet_tol = cfg.get("jet_tolerance", 1e-6)
    engine = oracles.engine_vs_bruteforce(points=points, seed=seed)
    jets_rep = oracles.jets_vs_finite_differences(seed=seed)
    ok_engine = engine["max_deviation"] <= tol
    ok_jets = jets_rep["max_deviation"] <= jet_tol
    results = {"engine_vs_bruteforce": engine,
               "jets_vs_finite_differences": jets_rep,
               "tolerance": tol, "jet_tolerance": jet_tol}
    lines = [
        f"oracle contraction engine: max dev {engine['max_deviation']:.2e} "
        f"(<= {tol:g}) {'ok' if ok_engine else 'FAIL'}",
        f"oracle jets vs finite differences: max dev "
        f"{jets_rep['max_deviation']:.2e} (<= {jet_tol:g}) "
        f"{'ok' if ok_jets else 'FAIL'}",
    ]
    return results, ok_engine and ok_jets, lines


def _run_cylinder(cfg):
    m = _manifold(cfg)
    k = _require(cfg, "k")
    tol = cfg.get("tolerance", 1e-8)
    rep = cylinder_integral_check(m, k, resolution=cfg.get("resolution"),
                                  circle_count=cfg.get("circle_count", 8),
                                  tolerance=tol)
    results = {"manifold": m.name, "k": k, "cylinder_integral": rep.lhs,
               "base_integral_times_2pi": rep.rhs, "rel_error": rep.rel_error,
               "tolerance": tol}
    line = (f"cylinder {m.name} k={k}: lhs={rep.lhs:.12g} rhs={rep.rhs:.12g} "
            f"rel={rep.rel_error:.2e} {'ok' if rep.passed else 'FAIL'}")
    return results, rep.passed, [line]


def _run_suite(cfg):
    runs = _require(cfg, "runs")
    child_reports = []
    lines = []
    passed = True
    for i, sub in enumerate(runs):
        validate_config(sub)
        if sub.get("task") == "suite":
            raise ConfigError("suite runs cannot nest")
        results, ok, sub_lines = execute(sub)
        passed = passed and ok
        child_reports.append({"task": sub["task"], "results": results,
                              "pass": ok})
        lines.extend(sub_lines)
    return {"runs": child_reports}, passed, lines


_RUNNERS = {
    "verify-gbc": _run_verify_gbc,
    "identity": _run_identity,
    "euler-lagrange": _run_euler_lagrange,
    "reduce": _run_reduce,
    "homogeneity": _run_homogeneity,
    "weight": _run_weight,
    "eval": _run_eval,
    "oracles": _run_oracles,
    "cylinder": _run_cylinder,
}


def execute(cfg, output=None):
    """Dispatch one validated config; returns (results, passed, lines)."""
    task = cfg["task"]
    fmt = cfg.get("format", "json")
    if task == "sweep":
        return _run_sweep(cfg, output=output, fmt=fmt)
    if task == "suite":
        return _run_suite(cfg)
    try:
        runner = _RUNNERS[task]
    except KeyError:
        raise ConfigError(f"unknown task {task!r}") from None
    return runner(cfg)


def run_config(config_path, output=None, quiet=False):
    """Load, run and report one config file; returns the exit code."""
    started = time.time()
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_path = output or cfg.get("output")
    fmt = cfg.get("format", "json")
    try:
        results, passed, lines = execute(cfg, output=out_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SingularMetricError, EvalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    full_report = {
        "schema_version": report.SCHEMA_VERSION,
        "version": __version__,
        "backend": backend.active_backend(),
        "task": cfg["task"],
        "config": cfg,
        "results": results,
        "pass": passed,
        "wall_time_s": time.time() - started,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "convention_ledger_sha256": report.convention_ledger_hash(),
    }
    try:
        if out_path and not (cfg["task"] == "sweep" and fmt == "csv"):
            report.write_report(full_report, out_path)
        elif not out_path and not quiet:
            print(report.dumps(full_report))
    except GbcError as exc:
        print(f"output failure: {exc}", file=sys.stderr)
        return 3
    if not quiet:
        for line in lines:
            print(line)
        print(f"{'PASS' if passed else 'FAIL'} ({cfg['task']}, "
              f"{full_report['wall_time_s']:.2f}s, backend {full_report['backend']})")
    return 0 if passed else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gbc",
        description="Verify curvature-invariant integral identities from "
                    "JSON run configurations.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one config file")
    run.add_argument("--config", required=True, help="path to the JSON config")
    run.add_argument("--output", default=None,
                     help="report path (overrides the config's output field)")
    run.add_argument("--quiet", action="store_true",
                     help="suppress the human-readable summary")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_config(args.config, output=args.output, quiet=args.quiet)
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
