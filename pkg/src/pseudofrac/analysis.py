"""Inequality oracles, the cone competitor and Holder-quotient diagnostics.

Each ``*_check`` returns a :class:`Margin` for an inequality ``lhs <= rhs``;
``margin = rhs - lhs`` is expected to be nonnegative up to float slack.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .energy import FracParams, GridFunction, seminorm_p
from .errors import BadExponents, NonProductDomain, TooLarge, ZeroFunction

ISOTROPIC_CAP = 2500


def sphere_measure(dim):
    """``(dim - 1)``-dimensional measure of the unit sphere in ``R^dim`` (2 for the two-point S^0)."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    if dim == 1:
        return 2.0
    if dim == 2:
        return 2.0 * math.pi
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


@dataclass(frozen=True)
class Margin:
    lhs: float
    rhs: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def scale(self):
        return max(abs(self.lhs), abs(self.rhs))

    def holds(self, rel=1e-12):
        return self.margin >= -rel * self.scale

    def __float__(self):
        return float(self.margin)


def _order(low, high, names):
    if not 0 < low < high < 1:
        raise BadExponents(f"need 0 < {names[0]} < {names[1]} < 1, got {low} and {high}")


def poincare_check(u, params, domain=None):
    """``2 (2 diam)^(-sp) / (sp) * ||u||_p^p <= [u]^p`` with the two-point sphere measure."""
    if not np.any(u.values):
        raise ZeroFunction("the Poincare check needs a nonzero function")
    domain = domain or u.grid.domain
    d = 2.0 * domain.diameter()
    bound = sphere_measure(1) * d ** (-params.sp) / params.sp
    norm_p = float(np.sum(np.abs(u.values) ** params.p) * u.grid.cell_area)
    return Margin(bound * norm_p, seminorm_p(u, params).total)


def inclusion_check(u, t, s, p, rule="corrected"):
    """``[u]_t^p <= [u]_s^p + 2^p (w_1 + w_1) / (tp) ||u||_p^p`` for seminorms over the domain."""
    _order(t, s, ("t", "s"))
    lhs = seminorm_p(u, FracParams(t, p, rule), restricted=True).total
    norm_p = float(np.sum(np.abs(u.values) ** p) * u.grid.cell_area)
    rhs = seminorm_p(u, FracParams(s, p, rule), restricted=True).total
    rhs += 2.0**p * 2.0 * sphere_measure(1) / (t * p) * norm_p
    return Margin(lhs, rhs)


def scaled_monotonicity_check(u, s0, s, p, domain=None, rule="corrected"):
    """``(1 - s0)[u]_{s0, domain}^p / (2^((1-s0)p) diam^((s-s0)p)) <= (1 - s)[u]_s^p``."""
    _order(s0, s, ("s0", "s"))
    domain = domain or u.grid.domain
    inner = seminorm_p(u, FracParams(s0, p, rule), restricted=True).total
    lhs = (1.0 - s0) * inner / (2.0 ** ((1.0 - s0) * p) * domain.diameter() ** ((s - s0) * p))
    rhs = (1.0 - s) * seminorm_p(u, FracParams(s, p, rule)).total
    return Margin(lhs, rhs)


def isotropic_seminorm(u, s, p):
    """Midpoint rule for the Gagliardo seminorm over all node pairs of the domain (O(N^2))."""
    grid = u.grid
    if grid.size > ISOTROPIC_CAP:
        raise TooLarge(f"{grid.size} nodes exceed the isotropic cap of {ISOTROPIC_CAP}")
    pts = grid.nodes
    vals = u.values
    i, k = np.triu_indices(grid.size, 1)
    dist = np.hypot(pts[i, 0] - pts[k, 0], pts[i, 1] - pts[k, 1])
    terms = np.abs(vals[i] - vals[k]) ** p * dist ** (-(2.0 + s * p))
    return 2.0 * math.fsum(terms) * grid.cell_area**2


def embedding_check(u, params):
    """``|u|_{W^{s,p}}^p <= 2^p (w_1 x_part + w_1 y_part)`` on product domains."""
    if u.grid.domain.kind != "rect":
        raise NonProductDomain("the embedding bound needs a product (rectangle) domain")
    parts = seminorm_p(u, params, restricted=True)
    rhs = 2.0**params.p * (sphere_measure(1) * parts.x_part + sphere_measure(1) * parts.y_part)
    return Margin(isotropic_seminorm(u, params.s, params.p), rhs)


# ---------------------------------------------------------------------------
# cone competitor


def cone_function(grid, s, center, rs):
    """``(1 - (|x0 - x|^s + |y0 - y|^s) / R_s)_+`` sampled at the nodes."""
    if not rs > 0:
        raise ValueError("R_s must be positive")
    dx = np.abs(grid.nodes[:, 0] - center[0])
    dy = np.abs(grid.nodes[:, 1] - center[1])
    return GridFunction(grid, np.maximum(0.0, 1.0 - (dx**s + dy**s) / rs))


# ---------------------------------------------------------------------------
# Holder quotients and the limit equation


@dataclass(frozen=True)
class QuotientBundle:
    A: float
    B: float
    C: float
    D: float


def _enclosing(x, intervals):
    for lo, hi in intervals:
        if lo < x < hi:
            return lo, hi
    raise ValueError("node is not inside its fibre")


def _fiber_quotients(vals, pos, intervals, s):
    """Sup and inf of ``(u(partner) - u(node)) / dist^s`` for every node of one fibre."""
    n = len(vals)
    ends = np.array([_enclosing(x, intervals) for x in pos])
    partner_pos = np.concatenate([np.broadcast_to(pos, (n, n)), ends], axis=1)
    partner_val = np.concatenate([np.broadcast_to(vals, (n, n)), np.zeros((n, 2))], axis=1)
    dist = np.abs(partner_pos - pos[:, None])
    q = (partner_val - vals[:, None]) / np.where(dist > 0, dist, 1.0) ** s
    q[np.arange(n), np.arange(n)] = np.nan
    return np.nanmax(q, axis=1), np.nanmin(q, axis=1)


def _all_quotients(u, s):
    grid = u.grid
    vals = u.values
    out = {key: np.empty(grid.size) for key in "ABCD"}
    for axis, (hi_key, lo_key) in ((1, "AB"), (0, "CD")):
        fibers = grid.x_fibers if axis == 0 else grid.y_fibers
        intervals = grid.x_intervals if axis == 0 else grid.y_intervals
        coord = grid.nodes[:, axis]
        for fib, ivs in zip(fibers, intervals):
            sup, inf = _fiber_quotients(vals[fib], coord[fib], ivs, s)
            out[hi_key][fib] = sup
            out[lo_key][fib] = inf
    return out


def holder_quotients(u, node, s):
    """A, B over the node's y-fibre and C, D over its x-fibre, zero-extension endpoints included."""
    grid = u.grid
    node = int(node)
    if not 0 <= node < grid.size:
        raise IndexError(f"node {node} outside 0..{grid.size - 1}")
    result = {}
    for axis, keys in ((1, "AB"), (0, "CD")):
        fibers = grid.x_fibers if axis == 0 else grid.y_fibers
        intervals = grid.x_intervals if axis == 0 else grid.y_intervals
        lattice = grid.iy if axis == 0 else grid.ix
        j = int(np.searchsorted(np.unique(lattice), lattice[node]))
        fib = fibers[j]
        where = int(np.flatnonzero(fib == node)[0])
        coord = grid.nodes[:, axis]
        sup, inf = _fiber_quotients(u.values[fib], coord[fib], intervals[j], s)
        result[keys[0]], result[keys[1]] = float(sup[where]), float(inf[where])
    return QuotientBundle(**result)


@dataclass
class ViscosityReport:
    ix: np.ndarray
    iy: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    residual: np.ndarray

    def quantiles(self):
        r = self.residual
        return {
            "min": float(r.min()),
            "median": float(np.median(r)),
            "q90": float(np.quantile(r, 0.9)),
            "max": float(r.max()),
        }

    def rows(self):
        for k in range(len(self.residual)):
            yield (int(self.ix[k]), int(self.iy[k]), self.A[k], self.B[k], self.C[k], self.D[k], self.residual[k])

    def write_csv(self, path):
        from .io import atomic_writer

        with atomic_writer(path) as fh:
            writer = csv.writer(fh)
            writer.writerow(["ix", "iy", "A", "B", "C", "D", "residual"])
            for row in self.rows():
                writer.writerow([row[0], row[1], *(repr(float(v)) for v in row[2:])])


def viscosity_diagnostic(u, lambda_inf, s):
    """Pointwise ``|max(A, C) - max(-B, -D, lambda_inf u)|`` at every node.

    A diagnostic only: the limit equation holds in the viscosity sense, and at
    interior maxima of ``u`` the pointwise residual is nonzero even for an
    exact solution.  ``u`` is rescaled to unit sup norm.
    """
    top = float(np.abs(u.values).max())
    if top > 0:
        u = u.with_values(u.values / top)
    q = _all_quotients(u, s)
    left = np.maximum(q["A"], q["C"])
    right = np.maximum(np.maximum(-q["B"], -q["D"]), lambda_inf * u.values)
    grid = u.grid
    return ViscosityReport(grid.ix, grid.iy, q["A"], q["B"], q["C"], q["D"], np.abs(left - right))


# ---------------------------------------------------------------------------
# randomized inequality suite

SUITE_PAIRS = ((0.5, 2.0), (0.6, 3.0))
SUITE_INCLUSION = (0.3, 0.6)
SUITE_MONOTONE = (0.4, 0.8)


@dataclass(frozen=True)
class CheckRow:
    check_name: str
    param_summary: str
    margin: float
    scale: float
    passed: bool


def inequality_suite(grid, count=200, seed=0, rel=1e-12):
    """Four inequality margins for ``count`` random functions at each (s, p) of the suite."""
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(count):
        u = GridFunction(grid, rng.uniform(-1.0, 1.0, grid.size))
        for s, p in SUITE_PAIRS:
            t, s_hi = SUITE_INCLUSION
            s0, s1 = SUITE_MONOTONE
            checks = (
                ("poincare", f"u={k};s={s};p={p}", poincare_check(u, FracParams(s, p))),
                ("embedding", f"u={k};s={s};p={p}", embedding_check(u, FracParams(s, p))),
                ("inclusion", f"u={k};t={t};s={s_hi};p={p}", inclusion_check(u, t, s_hi, p)),
                ("scaled_monotonicity", f"u={k};s0={s0};s={s1};p={p}", scaled_monotonicity_check(u, s0, s1, p)),
            )
            for name, summary, m in checks:
                rows.append(CheckRow(name, summary, m.margin, m.scale, m.holds(rel)))
    return rows


def write_check_csv(rows, path):
    from .io import atomic_writer

    with atomic_writer(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["check_name", "param_summary", "margin", "pass"])
        for r in rows:
            writer.writerow([r.check_name, r.param_summary, repr(float(r.margin)), str(r.passed).lower()])


__all__ = [
    "sphere_measure", "Margin", "poincare_check", "inclusion_check", "scaled_monotonicity_check",
    "embedding_check", "isotropic_seminorm", "cone_function", "QuotientBundle", "holder_quotients",
    "ViscosityReport", "viscosity_diagnostic", "CheckRow", "inequality_suite", "write_check_csv",
]
