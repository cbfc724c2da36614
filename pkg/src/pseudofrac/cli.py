"""Command-line front end.

    pseudofrac COMMAND [--config FILE] [flags]

Commands: eig, sweep-p, sweep-s, geom, diagram, check, viscosity.
Exit codes: 0 success, 1 a check failed, 2 usage error (including empty
grids), 3 solver non-convergence.  stdout carries a one-line JSON summary,
stderr human-readable diagnostics.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, harness, io
from .eigensolver import SolverConfig, dense_p2_oracle, minimize_rayleigh
from .energy import FracParams, linf_norm, rayleigh, seminorm_infty
from .errors import DomainError, EmptyGrid, PseudoFracError
from .geometry import DEFAULT_BOUNDARY_SPACING, build_grid, compute_Rs, parse_domain

COMMANDS = ("eig", "sweep-p", "sweep-s", "geom", "diagram", "check", "viscosity")
SUITES = ("inequalities", "oracle", "cone")
FORMATS = ("csv", "json")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    """Bad command line or config file (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: str | None = None
    s: float | None = None
    p: float | None = None
    p_list: tuple | None = None
    s_list: tuple | None = None
    h: float | None = None
    boundary_spacing: float = DEFAULT_BOUNDARY_SPACING
    seed: int = 0
    restarts: int = 1
    grad_tol: float = 1e-8
    max_iters: int = 20000
    out: str | None = None
    format: str = "csv"
    suite: str = "inequalities"
    timing: bool = True

    def solver_config(self):
        return SolverConfig(
            max_iters=self.max_iters, grad_tol=self.grad_tol, restarts=self.restarts, rng_seed=self.seed
        )


FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = _Parser(
        prog="pseudofrac",
        description="First eigenvalue of the anisotropic fractional pseudo p-Laplacian and its limits.",
        epilog=(
            "Domain grammar: ball:R[:cx,cy] | rect:hx,hy[:cx,cy] | rectunion:hx,hy,cx,cy;hx,hy,cx,cy;...  "
            "Lists are comma separated, e.g. --p-list 2,4,8.  A JSON config file may hold any flag "
            "under its long name with dashes as underscores (\"p_list\": [2, 4]); flags override it.  "
            "PSEUDOFRAC_THREADS caps the number of parallel restarts (0 = all cores).  "
            "Exit codes: 0 ok, 1 check failed, 2 usage error, 3 not converged."
        ),
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with default values")
    parser.add_argument("--domain", help="domain string, see grammar below")
    parser.add_argument("--s", type=float, help="fractional order in (0,1)")
    parser.add_argument("--p", type=float, help="integrability exponent > 1")
    parser.add_argument("--p-list", type=_floats, help="ascending exponents for sweep-p")
    parser.add_argument("--s-list", type=_floats, help="ascending orders for sweep-s")
    parser.add_argument("--h", type=float, help="grid spacing")
    parser.add_argument("--boundary-spacing", type=float, help="boundary sample spacing")
    parser.add_argument("--seed", type=int, help="base RNG seed")
    parser.add_argument("--restarts", type=int, help="random restarts per solve")
    parser.add_argument("--grad-tol", type=float, help="stationarity tolerance")
    parser.add_argument("--max-iters", type=int, help="iteration cap per descent")
    parser.add_argument("--out", help="output directory for artifacts")
    parser.add_argument("--format", choices=FORMATS, help="artifact format")
    parser.add_argument("--suite", choices=SUITES, help="suite for the check command")
    parser.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                        help="write 0 for wall times so sweep files are reproducible byte for byte")
    return parser


def _load_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("--config: top level must be a JSON object")
    unknown = sorted(set(data) - FIELDS)
    if unknown:
        raise UsageError(f"--config: unknown keys {unknown}")
    return data


def _validate(cfg):
    def bad(flag, message):
        raise UsageError(f"--{flag}: {message}")

    if cfg.command not in COMMANDS:
        raise UsageError(f"command must be one of {COMMANDS}")
    if cfg.s is not None and not 0 < cfg.s < 1:
        bad("s", "s must lie in (0,1)")
    if cfg.p is not None and not 1 < cfg.p < math.inf:
        bad("p", "p must exceed 1")
    if cfg.h is not None and not cfg.h > 0:
        bad("h", "h must be positive")
    if not cfg.boundary_spacing > 0:
        bad("boundary-spacing", "spacing must be positive")
    if cfg.restarts < 1:
        bad("restarts", "at least one restart is needed")
    if cfg.max_iters < 1:
        bad("max-iters", "at least one iteration is needed")
    if not cfg.grad_tol > 0:
        bad("grad-tol", "tolerance must be positive")
    if cfg.format not in FORMATS:
        bad("format", f"choose from {FORMATS}")
    if cfg.suite not in SUITES:
        bad("suite", f"choose from {SUITES}")
    for flag, values, low in (("p-list", cfg.p_list, 1.0), ("s-list", cfg.s_list, 0.0)):
        if values is None:
            continue
        if not values or any(b <= a for a, b in zip(values, values[1:])):
            bad(flag, "values must be strictly ascending")
        high = 1.0 if flag == "s-list" else math.inf
        if not all(low < v < high for v in values):
            bad(flag, f"values must lie in ({low}, {high})")
    if cfg.domain is not None:
        try:
            parse_domain(cfg.domain)
        except DomainError as exc:
            bad("domain", str(exc))
    needs = {
        "eig": ("domain", "s", "p"),
        "sweep-p": ("domain", "s", "p_list"),
        "sweep-s": ("domain", "p", "s_list"),
        "geom": ("domain", "s"),
        "diagram": ("domain",),
        "check": (),
        "viscosity": ("domain", "s"),
    }[cfg.command]
    for name in needs:
        if getattr(cfg, name) is None:
            bad(name.replace("_", "-"), f"required by {cfg.command}")
    return cfg


def parse_config(argv):
    """Merge an optional JSON config file with command-line flags (flags win)."""
    ns = build_parser().parse_args(argv)
    values = _load_file(ns.config) if ns.config else {}
    for name in FIELDS:
        flag_value = getattr(ns, name, None)
        if flag_value is not None:
            values[name] = flag_value
    if "command" not in values:
        raise UsageError("a command is required")
    for key in ("p_list", "s_list"):
        if values.get(key) is not None:
            values[key] = tuple(float(v) for v in values[key])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    return _validate(cfg)


def serialize(cfg):
    """argv that :func:`parse_config` turns back into ``cfg``."""
    argv = [cfg.command]
    default = RunConfig(command=cfg.command)
    for f in dataclasses.fields(RunConfig):
        if f.name == "command":
            continue
        value = getattr(cfg, f.name)
        if value == getattr(default, f.name):
            continue
        if f.name == "timing":
            argv.append("--no-timing")
            continue
        flag = "--" + f.name.replace("_", "-")
        if isinstance(value, tuple):
            argv += [flag, ",".join(repr(float(v)) for v in value)]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


# ---------------------------------------------------------------------------
# commands


def _grid(cfg, default_h=None):
    domain = parse_domain(cfg.domain)
    if cfg.h is None and default_h is None:
        return harness.default_grid(domain)
    return build_grid(domain, cfg.h if cfg.h is not None else default_h, cfg.boundary_spacing)


def _artifact(cfg, name):
    return os.path.join(cfg.out, name) if cfg.out else None


def _write_rows(cfg, stem, rows, header, csv_writer):
    path = _artifact(cfg, f"{stem}.{cfg.format}")
    if path is None:
        return None
    if cfg.format == "csv":
        csv_writer(rows, path)
    else:
        io.write_json([dict(zip(header, r)) for r in rows], path)
    return path


def _cmd_eig(cfg):
    grid = _grid(cfg)
    res = minimize_rayleigh(grid, FracParams(cfg.s, cfg.p), cfg.solver_config())
    path = _artifact(cfg, f"eigenfunction.{cfg.format}")
    if path:
        io.write_grid_function(res.u, path, cfg.format)
        io.write_json(res.to_dict(path), _artifact(cfg, "eig.json"))
    summary = {"command": "eig", **res.to_dict(path)}
    return summary, EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _sweep_summary(cfg, rows, name):
    header = harness.SWEEP_HEADER
    table = [[r.s, r.p, r.lam, r.lambda_scaled, r.reference, r.gap, r.grid_h, r.converged, r.wall_time_ms] for r in rows]
    path = _write_rows(cfg, name, rows if cfg.format == "csv" else table, header, harness.write_sweep_csv)
    gaps = [r.gap for r in rows]
    summary = {
        "command": cfg.command,
        "rows": len(rows),
        "reference": rows[0].reference,
        "gaps": gaps,
        "gap_strictly_decreasing": all(b < a for a, b in zip(gaps, gaps[1:])),
        "converged": all(r.converged for r in rows),
        "artifact": path,
    }
    return summary, EXIT_OK if summary["converged"] else EXIT_NOT_CONVERGED


def _cmd_sweep_p(cfg):
    grid = _grid(cfg)
    rows = harness.sweep_p(grid.domain, cfg.s, cfg.p_list, grid, cfg.solver_config(), timing=cfg.timing)
    return _sweep_summary(cfg, rows, "sweep_p")


def _cmd_sweep_s(cfg):
    grid = _grid(cfg)
    rows = harness.sweep_s(grid.domain, cfg.p, cfg.s_list, grid, cfg.solver_config(), timing=cfg.timing)
    return _sweep_summary(cfg, rows, "sweep_s")


def _cmd_geom(cfg):
    grid = _grid(cfg, default_h=0.02)
    geo = compute_Rs(grid.domain, cfg.s, grid)
    summary = {
        "command": "geom",
        "domain": grid.domain.to_string(),
        "s": cfg.s,
        "R_s": geo.R_s,
        "lambda_infinity": geo.lambda_infinity,
        "argmax": list(geo.argmax_point),
        "node_R_s": geo.node_R_s,
        "grid": grid.metadata(),
    }
    if cfg.out:
        io.write_json(summary, _artifact(cfg, "geom.json"))
    return summary, EXIT_OK


def _cmd_diagram(cfg):
    grid = _grid(cfg)
    report = harness.diagram_check(grid.domain, grid, cfg.s or 0.95, cfg.p or 32.0, cfg.solver_config())
    corners = [report[k] for k in ("corner_sp", "corner_1p", "corner_sinf", "corner_inf")]
    ok = all(math.isfinite(c) and c > 0 for c in corners)
    if cfg.out:
        io.write_json(report, _artifact(cfg, "diagram.json"))
    code = EXIT_OK if ok else EXIT_CHECK
    if ok and not all(report["converged"].values()):
        code = EXIT_NOT_CONVERGED
    return {"command": "diagram", **report}, code


def _cmd_check(cfg):
    if cfg.suite == "inequalities":
        domain = parse_domain(cfg.domain or "rect:0.5,0.5")
        grid = build_grid(domain, cfg.h or 1.0 / 16, cfg.boundary_spacing)
        rows = analysis.inequality_suite(grid, 200, cfg.seed)
        header = ("check_name", "param_summary", "margin", "pass")
        table = [[r.check_name, r.param_summary, r.margin, r.passed] for r in rows]
        path = _write_rows(cfg, "checks", rows if cfg.format == "csv" else table, header, analysis.write_check_csv)
        failed = [r for r in rows if not r.passed]
        summary = {
            "command": "check", "suite": "inequalities", "margins": len(rows), "failed": len(failed),
            "min_relative_margin": min(r.margin / r.scale if r.scale else 0.0 for r in rows), "artifact": path,
        }
        return summary, EXIT_CHECK if failed else EXIT_OK
    if cfg.suite == "oracle":
        domain = parse_domain(cfg.domain or "rect:0.5,0.5")
        grid = build_grid(domain, cfg.h or 1.0 / 12, cfg.boundary_spacing)
        s = cfg.s or 0.5
        res = minimize_rayleigh(grid, FracParams(s, 2.0), cfg.solver_config())
        lam, _ = dense_p2_oracle(grid, s)
        rel = abs(res.lam - lam) / lam
        summary = {"command": "check", "suite": "oracle", "lambda": res.lam, "oracle": lam, "relative_error": rel}
        return summary, EXIT_OK if rel <= 1e-6 else EXIT_CHECK
    domain = parse_domain(cfg.domain or "ball:1")
    grid = build_grid(domain, cfg.h or 1.0 / 24, cfg.boundary_spacing)
    s, p = cfg.s or 0.5, cfg.p or 4.0
    geo = compute_Rs(domain, s, grid)
    cone = analysis.cone_function(grid, s, grid.nodes[geo.node_index], geo.node_R_s)
    holder = seminorm_infty(cone, s)
    res = minimize_rayleigh(grid, FracParams(s, p), cfg.solver_config())
    quotient = rayleigh(cone, FracParams(s, p))
    ok = holder <= 1.0 / geo.node_R_s + 1e-9 and linf_norm(cone) == 1.0 and res.lam <= quotient
    summary = {
        "command": "check", "suite": "cone", "holder_seminorm": holder, "bound": 1.0 / geo.node_R_s,
        "lambda": res.lam, "cone_quotient": quotient,
    }
    return summary, EXIT_OK if ok else EXIT_CHECK


def _cmd_viscosity(cfg):
    grid = _grid(cfg)
    p = cfg.p or 32.0
    res = minimize_rayleigh(grid, FracParams(cfg.s, p), cfg.solver_config())
    lam_inf = 1.0 / compute_Rs(grid.domain, cfg.s, grid).R_s
    report = analysis.viscosity_diagnostic(res.u, lam_inf, cfg.s)
    path = _artifact(cfg, "viscosity.csv")
    if path:
        report.write_csv(path)
    quantiles = report.quantiles()
    summary = {
        "command": "viscosity", "p": p, "lambda_infinity": lam_inf, "residual": quantiles,
        "finite": bool(np.all(np.isfinite(report.residual))), "artifact": path,
    }
    return summary, EXIT_OK if res.converged else EXIT_NOT_CONVERGED


HANDLERS = {
    "eig": _cmd_eig, "sweep-p": _cmd_sweep_p, "sweep-s": _cmd_sweep_s, "geom": _cmd_geom,
    "diagram": _cmd_diagram, "check": _cmd_check, "viscosity": _cmd_viscosity,
}


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def run(cfg, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        summary, code = HANDLERS[cfg.command](cfg)
    except (EmptyGrid, DomainError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_USAGE
    except PseudoFracError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_CHECK
    summary["exit_code"] = code
    print(json.dumps(_jsonable(summary), sort_keys=True), file=stdout)
    if code == EXIT_NOT_CONVERGED:
        print("warning: solver did not reach the stationarity tolerance", file=stderr)
    elif code == EXIT_CHECK:
        print("check failed", file=stderr)
    return code


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
