"""Parameter sweeps in p and s with warm starts, and the four-corner limit diagram."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from dataclasses import dataclass

from .eigensolver import SolverConfig, minimize_rayleigh
from .energy import FracParams
from .errors import GridMismatch
from .geometry import build_grid, compute_Rs, lambda_infinity
from .local_limit import bbm_constant, minimize_local_rayleigh

SWEEP_HEADER = ("s", "p", "lambda", "lambda_scaled", "reference", "gap", "grid_h", "converged", "wall_time_ms")
DEFAULT_CELLS = 24


@dataclass(frozen=True)
class SweepRecord:
    s: float
    p: float
    lam: float
    lambda_scaled: float
    reference: float
    gap: float
    grid_h: float
    converged: bool
    wall_time_ms: int
    iterations: int = 0

    def csv_row(self):
        return [
            repr(self.s), repr(self.p), repr(self.lam), repr(self.lambda_scaled), repr(self.reference),
            repr(self.gap), repr(self.grid_h), str(self.converged).lower(), str(self.wall_time_ms),
        ]


def default_grid(domain, cells=DEFAULT_CELLS):
    """Grid whose spacing puts ``cells`` cells across the longer side of the bounding box."""
    xmin, xmax, ymin, ymax = domain.bbox()
    return build_grid(domain, max(xmax - xmin, ymax - ymin) / cells)


def _grid_for(domain, grid):
    if grid is None:
        return default_grid(domain)
    if grid.domain != domain:
        raise GridMismatch("grid was built for a different domain")
    return grid


def _ascending(values, name, low, high):
    values = [float(v) for v in values]
    if not values:
        raise ValueError(f"{name} is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly ascending")
    if not all(low < v < high for v in values):
        raise ValueError(f"{name} values must lie in ({low}, {high})")
    return values


def _clock(timing):
    start = time.perf_counter()
    return lambda: int(round((time.perf_counter() - start) * 1000)) if timing else 0


def sweep_p(domain, s, p_list, grid=None, config=None, warm=True, timing=True):
    """Rows of ``lambda^(1/p)`` against ``Lambda_inf(s)``, warm-starting each p from the last.

    Solver trouble is recorded as ``converged=False``; the sweep always finishes.
    """
    p_list = _ascending(p_list, "p_list", 1.0, math.inf)
    grid = _grid_for(domain, grid)
    config = config or SolverConfig()
    reference = lambda_infinity(domain, s, grid)
    rows, previous = [], None
    for p in p_list:
        elapsed = _clock(timing)
        run_config = dataclasses.replace(config, warm_start=previous) if warm and previous is not None else config
        res = minimize_rayleigh(grid, FracParams(s, p), run_config)
        previous = res.u
        scaled = math.exp(res.log_lambda_over_p)
        rows.append(SweepRecord(
            s=float(s), p=p, lam=res.lam, lambda_scaled=scaled, reference=reference,
            gap=abs(scaled - reference), grid_h=grid.h[0], converged=res.converged,
            wall_time_ms=elapsed(), iterations=res.iterations,
        ))
    return rows


def local_reference(grid, p, config=None):
    """``lambda_1(1, p)`` on ``grid`` with the validated constant ``K = 2/p`` in both directions."""
    k = bbm_constant(1, p).value
    return minimize_local_rayleigh(grid, p, k, k, config)


def sweep_s(domain, p, s_list, grid=None, config=None, warm=True, timing=True):
    """Rows of ``(1 - s) lambda_1(s, p)`` against the local eigenvalue ``lambda_1(1, p)``."""
    s_list = _ascending(s_list, "s_list", 0.0, 1.0)
    grid = _grid_for(domain, grid)
    config = config or SolverConfig()
    reference = local_reference(grid, p, config).lambda_local
    rows, previous = [], None
    for s in s_list:
        elapsed = _clock(timing)
        run_config = dataclasses.replace(config, warm_start=previous) if warm and previous is not None else config
        res = minimize_rayleigh(grid, FracParams(s, p), run_config)
        previous = res.u
        scaled = (1.0 - s) * res.lam
        rows.append(SweepRecord(
            s=s, p=float(p), lam=res.lam, lambda_scaled=scaled, reference=reference,
            gap=abs(scaled - reference), grid_h=grid.h[0], converged=res.converged,
            wall_time_ms=elapsed(), iterations=res.iterations,
        ))
    return rows


def sweep_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def write_sweep_csv(rows, path):
    from .io import atomic_writer

    with atomic_writer(path) as fh:
        fh.write(sweep_csv(rows))


def diagram_check(domain, grid=None, s_hi=0.95, p_hi=32.0, config=None):
    """Four corners of the limit diagram on one grid and the gaps along its four edges.

    Corners: ``((1-s)lambda_1(s,p))^(1/p)``, ``lambda_1(1,p)^(1/p)``, ``Lambda_inf(s)`` and
    ``Lambda_inf = 1/R_1``, all at ``s = s_hi`` and ``p = p_hi``.
    """
    if not 0 < s_hi < 1:
        raise ValueError("s_hi must lie in (0,1)")
    if not p_hi > 1:
        raise ValueError("p_hi must exceed 1")
    grid = _grid_for(domain, grid)
    config = config or SolverConfig()
    nonlocal_res = minimize_rayleigh(grid, FracParams(s_hi, p_hi), config)
    local_res = local_reference(grid, p_hi, config)
    corner_sp = math.exp(math.log(1.0 - s_hi) / p_hi + nonlocal_res.log_lambda_over_p)
    corner_1p = math.exp(local_res.log_lambda_over_p)
    corner_sinf = lambda_infinity(domain, s_hi, grid)
    corner_inf = 1.0 / compute_Rs(domain, 1.0, grid).R_s
    edges = {
        "s_to_1_at_p": abs(corner_sp - corner_1p),
        "p_to_inf_at_s": abs(corner_sp - corner_sinf),
        "p_to_inf_local": abs(corner_1p - corner_inf),
        "s_to_1_geometric": abs(corner_sinf - corner_inf),
    }
    return {
        "corner_sp": corner_sp,
        "corner_1p": corner_1p,
        "corner_sinf": corner_sinf,
        "corner_inf": corner_inf,
        "edges": edges,
        "s_hi": float(s_hi),
        "p_hi": float(p_hi),
        "grid": grid.metadata(),
        "converged": {"nonlocal": nonlocal_res.converged, "local": local_res.converged},
    }


__all__ = [
    "SweepRecord", "SWEEP_HEADER", "default_grid", "sweep_p", "sweep_s", "sweep_csv", "write_sweep_csv",
    "local_reference", "diagram_check",
]
