"""Discrete anisotropic fractional seminorms and the nonlocal pseudo p-Laplacian.

A grid function ``u`` lives on the interior nodes of a :class:`~pseudofrac.geometry.Grid`
and is zero on the complement of the domain.  The x-part of the energy couples
nodes on the same row, the y-part nodes on the same column:

    x_part = sum_rows sum_{i != k} |u_i - u_k|^p * kernel(i, k) * hx * hy
             + 2 * sum_i |u_i|^p * tail_x(i) * hx * hy

``kernel(i, k) = hx / |x_i - x_k|^(1+sp)`` (midpoint rule) plus, for lattice
neighbours, a self-cell term that integrates the singular kernel exactly for a
linear profile over the half cell next to the node.  The tail is the analytic
integral of the kernel over the part of the row outside the domain, counted
for both orderings of the pair.

Every energy here has the common shape

    E(u) = sum_j c_j |u_a(j) - u_b(j)|^p + sum_i g_i |u_i|^p,

which :class:`PowerForm` evaluates together with its derivative, the bilinear
form H(u, v), and log-domain variants that stay finite for large p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import GridMismatch, ZeroFunction

QUADRATURE_RULES = ("corrected", "midpoint")
HESSIAN_FLOOR = 1e-6


@dataclass(frozen=True)
class FracParams:
    """Fractional order ``s`` in (0, 1), integrability ``p`` in (1, inf) and quadrature rule."""

    s: float
    p: float
    rule: str = "corrected"

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0,1), got {self.s}")
        if not 1 < self.p < math.inf:
            raise ValueError(f"p must lie in (1,inf), got {self.p}")
        if self.rule not in QUADRATURE_RULES:
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "p", float(self.p))

    @property
    def sp(self):
        return self.s * self.p


class GridFunction:
    """Values at the interior nodes of ``grid``; zero everywhere else."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.size,):
            raise GridMismatch(f"expected {grid.size} values, got shape {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def from_callable(cls, grid, func):
        return cls(grid, func(grid.nodes[:, 0], grid.nodes[:, 1]))

    def with_values(self, values):
        return GridFunction(self.grid, values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self):
        return f"GridFunction(nodes={self.grid.size})"


def _same_grid(*funcs):
    grid = funcs[0].grid
    for f in funcs[1:]:
        if f.grid is not grid:
            raise GridMismatch("grid functions live on different grids")
    return grid


def signed_power(a, q):
    """``|a|^(q-1) * a`` written ``(a)^q`` in the literature for q = p - 1."""
    return np.sign(a) * np.abs(a) ** q


@dataclass(frozen=True)
class EnergyBreakdown:
    x_part: float
    y_part: float
    total: float
    log_total: float


def _logsumexp(logs):
    logs = logs[np.isfinite(logs)]
    if logs.size == 0:
        return -math.inf
    top = logs.max()
    return float(top + math.log(np.exp(logs - top).sum()))


class PowerForm:
    """``E(u) = sum_j c_j |u[a_j] - u[b_j]|^p + sum_i g_i |u_i|^p`` with ``c, g >= 0``.

    ``cell`` is the area weight that turns per-node operator values into
    derivatives: ``dE/du_i = p * cell * operator(u)_i``.
    """

    def __init__(self, size, a, b, c, g, p, cell):
        self.size = int(size)
        self.a = np.asarray(a, dtype=np.intp)
        self.b = np.asarray(b, dtype=np.intp)
        self.c = np.asarray(c, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.p = float(p)
        self.cell = float(cell)
        with np.errstate(divide="ignore"):
            self.log_c = np.log(self.c)
            self.log_g = np.log(self.g)

    def concat(self, other):
        return PowerForm(
            self.size,
            np.concatenate([self.a, other.a]),
            np.concatenate([self.b, other.b]),
            np.concatenate([self.c, other.c]),
            self.g + other.g,
            self.p,
            self.cell,
        )

    def scaled(self, factor):
        return PowerForm(self.size, self.a, self.b, self.c * factor, self.g * factor, self.p, self.cell)

    # plain evaluation ---------------------------------------------------

    def terms(self, u, v=None):
        """Per-term contributions to H(u, v) (to E(u) when ``v`` is None), pair terms first."""
        du = u[self.a] - u[self.b]
        q = self.p - 1.0
        pa = np.abs(du) ** q
        ps = np.abs(u) ** q
        if v is None:
            return np.concatenate([self.c * (pa * np.abs(du)), self.g * (ps * np.abs(u))])
        dv = v[self.a] - v[self.b]
        return np.concatenate([self.c * (pa * np.sign(du) * dv), self.g * (ps * np.sign(u) * v)])

    def energy(self, u, exact=False):
        t = self.terms(u)
        return math.fsum(t) if exact else float(t.sum())

    def form(self, u, v, exact=False):
        t = self.terms(u, v)
        return math.fsum(t) if exact else float(t.sum())

    def operator(self, u):
        """Per-node operator values so that ``sum(op * v) * cell == H(u, v)``."""
        flux = self.c * signed_power(u[self.a] - u[self.b], self.p - 1.0)
        out = np.bincount(self.a, flux, self.size) - np.bincount(self.b, flux, self.size)
        out += self.g * signed_power(u, self.p - 1.0)
        return out / self.cell

    def gradient(self, u):
        return self.p * self.cell * self.operator(u)

    def hessian_diagonal(self, u):
        """Diagonal of the Hessian of ``E`` (p >= 2)."""
        q = self.p - 2.0
        pair = self.c * np.abs(u[self.a] - u[self.b]) ** q
        out = np.bincount(self.a, pair, self.size) + np.bincount(self.b, pair, self.size)
        out += self.g * np.abs(u) ** q
        return self.p * (self.p - 1.0) * out

    # log domain -----------------------------------------------------------

    def log_energy(self, u):
        du = np.abs(u[self.a] - u[self.b])
        with np.errstate(divide="ignore"):
            logs = np.concatenate([self.log_c + self.p * np.log(du), self.log_g + self.p * np.log(np.abs(u))])
        return _logsumexp(logs)

    def scaled_gradient(self, u, log_e=None):
        """``grad E(u) / E(u)`` evaluated without forming ``E``."""
        if log_e is None:
            log_e = self.log_energy(u)
        q = self.p - 1.0
        du = u[self.a] - u[self.b]
        with np.errstate(divide="ignore"):
            fp = np.sign(du) * np.exp(self.log_c + q * np.log(np.abs(du)) - log_e)
            fs = np.sign(u) * np.exp(self.log_g + q * np.log(np.abs(u)) - log_e)
        out = np.bincount(self.a, fp, self.size) - np.bincount(self.b, fp, self.size) + fs
        return self.p * out

    def hessian_weights(self, u, log_e=None):
        """Per-term second-derivative weights ``p(p-1) c |du|^(p-2)`` (divided by ``E`` if ``log_e``).

        For p < 2 the differences are floored at a small fraction of the largest one.
        """
        q = self.p - 2.0
        du = np.abs(u[self.a] - u[self.b])
        au = np.abs(u)
        if q < 0:
            # the weights blow up at zero differences when p < 2; floor them
            floor = HESSIAN_FLOOR * max(float(du.max(initial=0.0)), float(au.max(initial=0.0)))
            du = np.maximum(du, floor)
            au = np.maximum(au, floor)
        if log_e is None:
            pair, single = self.c * du**q, self.g * au**q
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                lp = self.log_c + q * np.log(du) - log_e
                ls = self.log_g + q * np.log(au) - log_e
            pair = np.exp(np.nan_to_num(lp, nan=-np.inf))
            single = np.exp(np.nan_to_num(ls, nan=-np.inf))
        scale = self.p * (self.p - 1.0)
        return scale * pair, scale * single

    def hessian_matrix(self, u, log_e=None):
        """Sparse Hessian of ``E`` (of ``E`` divided by ``exp(log_e)`` when given)."""
        pair, single = self.hessian_weights(u, log_e)
        diag = np.bincount(self.a, pair, self.size) + np.bincount(self.b, pair, self.size) + single
        rows = np.concatenate([self.a, self.b, np.arange(self.size)])
        cols = np.concatenate([self.b, self.a, np.arange(self.size)])
        vals = np.concatenate([-pair, -pair, diag])
        return sparse.csc_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    def scaled_hessian_diagonal(self, u, log_e):
        """Hessian diagonal of ``E`` divided by ``E`` (p >= 2), log-domain safe."""
        q = self.p - 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = self.log_c + q * np.log(np.abs(u[self.a] - u[self.b])) - log_e
            ls = self.log_g + q * np.log(np.abs(u)) - log_e
        pair = np.exp(np.nan_to_num(lp, nan=-np.inf))
        out = np.bincount(self.a, pair, self.size) + np.bincount(self.b, pair, self.size)
        out += np.exp(np.nan_to_num(ls, nan=-np.inf))
        return self.p * (self.p - 1.0) * out


# ---------------------------------------------------------------------------
# assembly on a grid


def _exterior_integral(x, intervals, sp):
    """Integral of ``|x - z|^-(1+sp)`` over the line minus the union of ``intervals``."""
    total = 0.0
    edges = [(-math.inf, intervals[0][0])]
    edges += [(intervals[j][1], intervals[j + 1][0]) for j in range(len(intervals) - 1)]
    edges += [(intervals[-1][1], math.inf)]
    for lo, hi in edges:
        if hi <= x:
            near, far = x - hi, x - lo
        else:
            near, far = lo - x, hi - x
        total += (near ** (-sp) - (0.0 if math.isinf(far) else far ** (-sp))) / sp
    return total


def _fiber_distance_to_exterior(x, intervals):
    for lo, hi in intervals:
        if lo < x < hi:
            return min(x - lo, hi - x)
    return 0.0


def self_cell_weight(h, s, p):
    """Kernel mass of the half cell next to a node for a linear profile, per |difference|^p.

    Equals ``int_0^{h/2} t^(p-1-sp) dt / h^p``.
    """
    e = (1.0 - s) * p
    return (h / 2.0) ** e / e / h**p


def _direction_blocks(grid, axis, s, p, rule):
    """Pair arrays and per-node single weights for the x (axis=0) or y (axis=1) part."""
    sp = s * p
    h = grid.h[axis]
    area = grid.cell_area
    fibers = grid.x_fibers if axis == 0 else grid.y_fibers
    intervals = grid.x_intervals if axis == 0 else grid.y_intervals
    lattice = grid.ix if axis == 0 else grid.iy
    coord = grid.nodes[:, axis]
    corr = self_cell_weight(h, s, p) if rule == "corrected" else 0.0
    a_list, b_list, c_list = [], [], []
    g = np.zeros(grid.size)
    for fib, ivs in zip(fibers, intervals):
        n = len(fib)
        pos = coord[fib]
        lat = lattice[fib]
        if n > 1:
            ia, ib = np.triu_indices(n, 1)
            dist = pos[ib] - pos[ia]
            adjacent = (lat[ib] - lat[ia]) == 1
            # both orderings of the pair give the factor 2
            w = 2.0 * area * (h * dist ** (-1.0 - sp) + corr * adjacent)
            a_list.append(fib[ia])
            b_list.append(fib[ib])
            c_list.append(w)
        has_left = np.zeros(n, dtype=bool)
        has_right = np.zeros(n, dtype=bool)
        step = np.diff(lat) == 1
        has_left[1:] = step
        has_right[:-1] = step
        ghosts = (~has_left).astype(float) + (~has_right)
        tails = np.array([_exterior_integral(x, ivs, sp) for x in pos])
        g[fib] += 2.0 * area * (tails + corr * ghosts)
    a = np.concatenate(a_list) if a_list else np.zeros(0, dtype=np.intp)
    b = np.concatenate(b_list) if b_list else np.zeros(0, dtype=np.intp)
    c = np.concatenate(c_list) if c_list else np.zeros(0)
    return PowerForm(grid.size, a, b, c, g, p, area)


def _restricted_block(grid, axis, s, p, rule):
    """Pair terms only: the seminorm of ``u`` over the domain, without exterior interaction."""
    full = _direction_blocks(grid, axis, s, p, rule)
    return PowerForm(grid.size, full.a, full.b, full.c, np.zeros(grid.size), p, full.cell)


@lru_cache(maxsize=64)
def _cached_forms(grid, s, p, rule, restricted):
    build = _restricted_block if restricted else _direction_blocks
    return build(grid, 0, s, p, rule), build(grid, 1, s, p, rule)


def seminorm_forms(grid, params, restricted=False):
    """``(x_form, y_form)`` for ``grid``; cached per grid object and parameters."""
    return _cached_forms(grid, params.s, params.p, params.rule, restricted)


def total_form(grid, params):
    fx, fy = seminorm_forms(grid, params)
    return fx.concat(fy)


# ---------------------------------------------------------------------------
# public operations


def _values(u, grid=None):
    if grid is not None and u.grid is not grid:
        raise GridMismatch("grid function does not live on the expected grid")
    return u.values


def seminorm_p(u, params, restricted=False):
    """p-th power of the anisotropic seminorm of the zero extension of ``u``.

    With ``restricted=True`` only node pairs inside the domain are summed.
    """
    fx, fy = seminorm_forms(u.grid, params, restricted)
    vals = u.values
    x_part = fx.energy(vals, exact=True)
    y_part = fy.energy(vals, exact=True)
    total = x_part + y_part
    log_total = math.log(total) if total > 0 else _logsumexp(
        np.array([fx.log_energy(vals), fy.log_energy(vals)])
    )
    return EnergyBreakdown(x_part=x_part, y_part=y_part, total=total, log_total=log_total)


def form_H(u, v, params):
    """Discrete ``H(u, v) = sum (u_i - u_k)^(p-1) (v_i - v_k) K`` over the same terms as the seminorm."""
    grid = _same_grid(u, v)
    fx, fy = seminorm_forms(grid, params)
    return fx.form(u.values, v.values, exact=True) + fy.form(u.values, v.values, exact=True)


def apply_operator(u, params):
    """Nodal values of the nonlocal pseudo p-Laplacian of ``u``."""
    fx, fy = seminorm_forms(u.grid, params)
    return u.with_values(fx.operator(u.values) + fy.operator(u.values))


def energy_gradient(u, params):
    """Gradient of ``seminorm_p(u).total`` with respect to the nodal values."""
    fx, fy = seminorm_forms(u.grid, params)
    return u.with_values(fx.gradient(u.values) + fy.gradient(u.values))


def lp_norm(u, p):
    """Discrete ``(sum |u_i|^p * cell)^(1/p)``; evaluated by max-factoring so large p is safe."""
    vals = np.abs(u.values)
    top = vals.max() if vals.size else 0.0
    if top == 0.0:
        return 0.0
    return float(top * (np.sum((vals / top) ** p) * u.grid.cell_area) ** (1.0 / p))


def linf_norm(u):
    return float(np.abs(u.values).max()) if u.values.size else 0.0


def log_lp_power(u, p):
    """``log sum |u_i|^p cell`` without overflow."""
    vals = np.abs(u.values)
    with np.errstate(divide="ignore"):
        return _logsumexp(math.log(u.grid.cell_area) + p * np.log(vals))


def log_rayleigh(u, params):
    """``(1/p) log([u]^p / ||u||_p^p)`` evaluated in the log domain."""
    if not np.any(u.values):
        raise ZeroFunction("Rayleigh quotient of the zero function")
    fx, fy = seminorm_forms(u.grid, params)
    log_e = _logsumexp(np.array([fx.log_energy(u.values), fy.log_energy(u.values)]))
    return (log_e - log_lp_power(u, params.p)) / params.p


def rayleigh(u, params):
    """Plain Rayleigh quotient ``[u]^p / ||u||_p^p`` (may overflow for large p)."""
    if not np.any(u.values):
        raise ZeroFunction("Rayleigh quotient of the zero function")
    e = seminorm_p(u, params).total
    n = float(np.sum(np.abs(u.values) ** params.p) * u.grid.cell_area)
    return e / n


def seminorm_infty(u, s):
    """Largest fibre Holder quotient ``|u_i - u_k| / |x_i - x_k|^s``.

    Nodes are also compared with the nearest exterior point of their fibre,
    where the zero extension vanishes.
    """
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0,1], got {s}")
    grid = u.grid
    vals = u.values
    best = 0.0
    for axis in (0, 1):
        fibers = grid.x_fibers if axis == 0 else grid.y_fibers
        intervals = grid.x_intervals if axis == 0 else grid.y_intervals
        coord = grid.nodes[:, axis]
        for fib, ivs in zip(fibers, intervals):
            pos = coord[fib]
            fv = vals[fib]
            if len(fib) > 1:
                dist = np.abs(pos[:, None] - pos[None, :])
                np.fill_diagonal(dist, np.inf)
                q = np.abs(fv[:, None] - fv[None, :]) / dist**s
                best = max(best, float(q.max()))
            edge = np.array([_fiber_distance_to_exterior(x, ivs) for x in pos])
            best = max(best, float((np.abs(fv) / edge**s).max()))
    return best
