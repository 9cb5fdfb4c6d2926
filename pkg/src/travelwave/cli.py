"""Command-line front end.

    travelwave solve --config configs/cubic.cfg --out out/
    travelwave verify --config configs/cubic.cfg --out out/
    travelwave verify --quick --out out/
    travelwave sweep --config configs/sweep.cfg --out out/ --jobs 4
    travelwave export-plot --config configs/cubic.cfg --out out/

Exit codes: 0 success, 2 config error, 3 hypothesis violation, 4 solver failure
(and 1 when ``verify`` runs but the aggregate check fails).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, build_spec, load_config
from .errors import HypothesisViolation, PoorFit, SolverError
from .harness import aggregate, instance_checks, matrix_checks, run_suite
from .problem import estimate_exponents
from .reconstruct import reconstruct
from .speed import Branch, solve_cstar

SCHEMA_VERSION = 1
PLOT_POINTS = 1001

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_SOLVER = 4

log = logging.getLogger("travelwave")


# ---------------------------------------------------------------- output helpers


def _num(v):
    """JSON-safe scalar: infinities and NaN as strings, numpy scalars as Python."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


def write_json(path: Path, data) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **data} if isinstance(data, dict) else data
    text = json.dumps(_num(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_csv(path: Path, header, columns) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow(["%.17g" % float(v) for v in row])


# ---------------------------------------------------------------- one instance


def _exponent_warnings(spec) -> list[dict]:
    if spec.exponents is not None:
        return []
    try:
        estimate_exponents(spec)
    except PoorFit as exc:
        return [{"kind": "PoorFit", "message": str(exc)}]
    return []


def _solve(cfg: RunConfig):
    spec = build_spec(cfg)
    result = solve_cstar(spec, cfg.tol_c, cfg.tol_ode, cfg.tol_quad)
    profile = reconstruct(spec, result, x0=cfg.anchor_x0, n=cfg.samples)
    return spec, result, profile


def _summary(cfg: RunConfig, spec, result, profile) -> dict:
    out = result.summary()
    out.update({
        "family": cfg.family,
        "params": dict(cfg.params),
        "p": cfg.p,
        "label": spec.label,
        "tolerances": {"tol_c": cfg.tol_c, "tol_ode": cfg.tol_ode, "tol_quad": cfg.tol_quad},
        "interfaces": profile.sidecar(),
    })
    return out


def solve_instance(cfg: RunConfig, out: Path) -> dict:
    """Solve one instance and write summary.json, profile.csv, profile.json and
    trajectory.csv into ``out``.  Returns the summary."""
    spec, result, profile = _solve(cfg)
    out.mkdir(parents=True, exist_ok=True)
    summary = _summary(cfg, spec, result, profile)
    write_json(out / "summary.json", summary)
    write_csv(out / "profile.csv", ("xi", "u", "du"), (profile.xi, profile.u, profile.du))
    write_json(out / "profile.json", profile.sidecar())
    traj = result.profile
    write_csv(out / "trajectory.csv", ("r", "y"), (traj.nodes, traj(traj.nodes)))
    return summary


def _sweep_worker(args) -> dict:
    name, cfg, out = args
    inst_dir = out / name
    inst_dir.mkdir(parents=True, exist_ok=True)
    code, message, summary = EXIT_OK, "", None
    try:
        summary = solve_instance(cfg, inst_dir)
    except ConfigError as exc:
        code, message = EXIT_CONFIG, str(exc)
    except HypothesisViolation as exc:
        code, message = EXIT_HYPOTHESIS, f"{type(exc).__name__}: {exc}"
    except SolverError as exc:
        code, message = EXIT_SOLVER, f"{type(exc).__name__}: {exc}"
    (inst_dir / "log.txt").write_text(
        (message or "ok") + "\n", encoding="utf-8"
    )
    entry = {"name": name, "exit_code": code, "p": cfg.p, "params": dict(cfg.params)}
    if summary is not None:
        entry["c_star"] = summary["c_star"]
        entry["branch"] = summary["branch"]
    else:
        entry["error"] = message
    return entry


# ---------------------------------------------------------------- commands


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        return cfg.base_dir / cfg.output_dir
    return Path("out")


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.tol_c is not None:
        changes["tol_c"] = args.tol_c
    if args.tol_ode is not None:
        changes["tol_ode"] = args.tol_ode
    if args.samples is not None:
        changes["samples"] = args.samples
    if not changes:
        return cfg
    from .config import validate

    cfg = replace(cfg, **changes)
    validate(cfg)
    return cfg


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return _apply_flags(load_config(args.config), args)


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    if cfg.sweep:
        raise ConfigError("config has a sweep grid; use the sweep subcommand")
    summary = solve_instance(cfg, out)
    print(f"c_star = {summary['c_star']!r}  branch = {summary['branch']}  -> {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = matrix_checks()
    warnings: list[dict] = []
    out = Path(args.out) if args.out else Path("out")
    if not args.quick:
        cfg = _load(args)
        if cfg.sweep:
            raise ConfigError("verify works on a single instance")
        out = _out_dir(args, cfg)
        spec, result, profile = _solve(cfg)
        warnings = _exponent_warnings(spec)
        checks = checks + instance_checks(spec, result, profile, cfg.tol_c, cfg.tol_ode)
    reports = run_suite(checks)
    ok = aggregate(reports)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", {
        "aggregate": ok,
        "reports": [r.to_dict() for r in reports],
        "warnings": warnings,
    })
    for r in reports:
        tag = "PASS" if (r.passed != r.control) else "FAIL"
        print(f"{tag}  {r.check_name}  margin={r.margin:.3g}")
    for w in warnings:
        print(f"WARNING {w['kind']}: {w['message']}")
    print("aggregate:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECKS_FAILED


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(name or "instance", inst, out) for name, inst in cfg.instances()]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(_sweep_worker, jobs))
    else:
        entries = [_sweep_worker(j) for j in jobs]
    entries.sort(key=lambda e: e["name"])
    failed = sum(e["exit_code"] != EXIT_OK for e in entries)
    write_json(out / "index.json", {"instances": entries, "count": len(entries), "failed": failed})
    for e in entries:
        status = "ok" if e["exit_code"] == EXIT_OK else e["error"]
        print(f"{e['name']}: {status}")
    return EXIT_OK if failed == 0 else max(e["exit_code"] for e in entries)


def cmd_export_plot(args) -> int:
    cfg = _load(args)
    if cfg.sweep:
        raise ConfigError("export-plot works on a single instance")
    out = _out_dir(args, cfg)
    _, result, profile = _solve(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "plot_xi_u.csv", ("xi", "u"), (profile.xi, profile.u))
    r = np.linspace(-1.0, 1.0, PLOT_POINTS)
    write_csv(out / "plot_r_y.csv", ("r", "y"), (r, result.profile(r)))
    print(f"wrote plot tables to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="travelwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tol-c", type=float, help="bisection width on c")
        p.add_argument("--tol-ode", type=float, help="ODE local error tolerance")
        p.add_argument("--samples", type=int, help="number of profile samples")
        return p

    common(sub.add_parser("solve", help="compute c* and the wave profile")).set_defaults(fn=cmd_solve)
    v = common(sub.add_parser("verify", help="run the property checks"))
    v.add_argument("--quick", action="store_true", help="manufactured matrix only")
    v.set_defaults(fn=cmd_verify)
    s = common(sub.add_parser("sweep", help="solve every point of a sweep grid"))
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.set_defaults(fn=cmd_sweep)
    common(sub.add_parser("export-plot", help="write xi-U and r-y tables")).set_defaults(
        fn=cmd_export_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"hypothesis violation ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except SolverError as exc:
        print(f"solver failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
