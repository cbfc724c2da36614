"""Local (s -> 1) limit problem.

As ``s -> 1`` the rescaled fractional energy ``(1 - s) [u]^p`` tends to

    K * sum |forward difference_x u / hx|^p * cell + K * sum |forward difference_y u / hy|^p * cell

on the same cell-centred grid, with the zero extension supplying ghost values
one lattice step past each fibre end.  ``K`` is the one-dimensional
Bourgain-Brezis-Mironescu constant returned by :func:`bbm_constant`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from .eigensolver import LOG_DOMAIN_P, SolverConfig, _descend, _initial, _Quotient, sign_normalize
from .energy import GridFunction, PowerForm
from .errors import GridMismatch, TooLarge, UnsupportedBlock

BBM_S_VALUES = (0.99, 0.995, 0.999)
# (1 - s) p held fixed; equals BBM_S_VALUES at p = 2
BBM_SP_GAPS = (0.02, 0.01, 0.002)
PROFILES = ("cos", "bump")
DENSE_FD_CAP = 4000


@dataclass(frozen=True)
class BBMConstant:
    n_block: int
    p: float
    value: float
    provenance: str
    numeric: float = math.nan
    candidate: float = math.nan

    @property
    def relative_disagreement(self):
        return abs(self.numeric - self.candidate) / self.candidate


# ---------------------------------------------------------------------------
# 1-D test profiles on (-1, 1): value, difference quotient and derivative


def _cos_profile():
    k = math.pi / 2

    def value(t):
        return math.cos(k * t)

    def quotient(t, r):
        # (phi(t + r) - phi(t)) / r without cancellation
        if r == 0.0:
            return -k * math.sin(k * t)
        return -2.0 * math.sin(k * (2 * t + r) / 2) * math.sin(k * r / 2) / r

    def slope(t):
        return -k * math.sin(k * t)

    return value, quotient, slope


def _bump_profile():
    def value(t):
        return (1.0 - t * t) ** 2

    def quotient(t, r):
        return -2.0 * (2 * t + r) + 4 * t**3 + 6 * t * t * r + 4 * t * r * r + r**3

    def slope(t):
        return -4.0 * t * (1.0 - t * t)

    return value, quotient, slope


def _profile(name):
    if name == "cos":
        return _cos_profile()
    if name == "bump":
        return _bump_profile()
    raise ValueError(f"unknown profile {name!r}; choose from {PROFILES}")


def gagliardo_1d(s, p, profile="cos"):
    """``int int_{R x R} |phi(t) - phi(tau)|^p / |t - tau|^(1 + sp)`` for the zero-extended profile.

    The square (-1, 1)^2 is written as twice the part above the diagonal in the
    variables ``(t, r = tau - t)``; the factor ``r^(p - 1 - sp)`` is handled by
    the algebraic quadrature weight so the near-singular behaviour costs nothing.
    """
    value, quotient, _ = _profile(profile)
    sp = s * p
    alpha = p - 1.0 - sp

    def inner(t):
        width = 1.0 - t
        if width <= 0:
            return 0.0
        return integrate.quad(
            lambda r: abs(quotient(t, r)) ** p, 0.0, width,
            weight="alg", wvar=(alpha, 0.0), epsabs=0.0, epsrel=1e-11, limit=200,
        )[0]

    square = 2.0 * integrate.quad(inner, -1.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)[0]

    def tail(t):
        return abs(value(t)) ** p * ((1.0 - t) ** (-sp) + (1.0 + t) ** (-sp)) / sp

    exterior = 2.0 * integrate.quad(tail, -1.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)[0]
    return square + exterior


def bbm_s_values(p):
    """Sample orders for the extrapolation.

    The first-order error grows like ``(1 - s) p``, so the gaps shrink with p.
    """
    return tuple(1.0 - gap / p for gap in BBM_SP_GAPS)


def numeric_bbm(p, profile="cos", s_values=None):
    """Linear extrapolation in ``1 - s`` of ``(1 - s) [phi]^p / int |phi'|^p`` to ``s = 1``."""
    if s_values is None:
        s_values = bbm_s_values(p)
    _, _, slope = _profile(profile)
    grad = integrate.quad(lambda t: abs(slope(t)) ** p, -1.0, 1.0, epsabs=0.0, epsrel=1e-12)[0]
    xs = np.array([1.0 - s for s in s_values])
    ys = np.array([(1.0 - s) * gagliardo_1d(s, p, profile) / grad for s in s_values])
    return float(np.polyfit(xs, ys, 1)[1])


def bbm_constant(n_block, p, method="analytic_1d", profile="cos"):
    """Constant ``K`` with ``(1 - s)[u]^p -> K ||u'||_p^p`` for one-dimensional blocks.

    ``analytic_1d`` returns the closed-form candidate ``2 / p`` only after it has
    been checked against the numeric limit (1 % agreement); ``numeric_limit``
    returns the extrapolated quadrature value itself.
    """
    if n_block != 1:
        raise UnsupportedBlock(f"only n_block = 1 is supported, got {n_block}")
    if not 1 < p <= 64:
        raise ValueError(f"p must lie in (1, 64], got {p}")
    if method not in ("analytic_1d", "numeric_limit"):
        raise ValueError(f"unknown method {method!r}")
    candidate = 2.0 / p
    numeric = numeric_bbm(p, profile)
    if method == "numeric_limit":
        return BBMConstant(1, float(p), numeric, "numeric_limit", numeric, candidate)
    if abs(numeric - candidate) > 0.01 * candidate:
        raise ArithmeticError(
            f"candidate 2/p = {candidate:.6g} disagrees with the numeric limit {numeric:.6g}"
        )
    return BBMConstant(1, float(p), candidate, "analytic_1d", numeric, candidate)


# ---------------------------------------------------------------------------
# discrete local energy


def _local_block(grid, axis, p, k):
    h = grid.h[axis]
    fibers = grid.x_fibers if axis == 0 else grid.y_fibers
    lattice = grid.ix if axis == 0 else grid.iy
    w = k * grid.cell_area / h**p
    a_list, b_list = [], []
    g = np.zeros(grid.size)
    for fib in fibers:
        lat = lattice[fib]
        step = np.diff(lat) == 1
        a_list.append(fib[1:][step])
        b_list.append(fib[:-1][step])
        # every node without a lattice neighbour on a side talks to a zero ghost there
        left = np.ones(len(fib))
        right = np.ones(len(fib))
        left[1:] -= step
        right[:-1] -= step
        g[fib] += w * (left + right)
    a = np.concatenate(a_list) if a_list else np.zeros(0, dtype=np.intp)
    b = np.concatenate(b_list) if b_list else np.zeros(0, dtype=np.intp)
    return PowerForm(grid.size, a, b, np.full(a.size, w), g, p, grid.cell_area)


def local_form(grid, p, kx, ky):
    return _local_block(grid, 0, p, kx).concat(_local_block(grid, 1, p, ky))


def local_energy(u, p, kx, ky, grid=None):
    """``Kx sum |D_x u|^p cell + Ky sum |D_y u|^p cell`` with forward differences."""
    if grid is not None and u.grid is not grid:
        raise GridMismatch("grid function does not live on the expected grid")
    return local_form(u.grid, p, kx, ky).energy(u.values, exact=True)


def local_energy_gradient(u, p, kx, ky):
    return u.with_values(local_form(u.grid, p, kx, ky).gradient(u.values))


@dataclass
class LocalEigenResult:
    lambda_local: float
    u: GridFunction
    residual: float
    iterations: int = 0
    converged: bool = True
    log_lambda_over_p: float = math.nan
    history: list = field(default_factory=list, repr=False)

    def to_dict(self, csv_path=None):
        return {
            "kind": "local",
            "lambda": self.lambda_local,
            "log_lambda_over_p": self.log_lambda_over_p,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "grid": self.u.grid.metadata(),
            "eigenfunction_csv": csv_path,
        }


def minimize_local_rayleigh(grid, p, kx, ky, config=None, record=False):
    """First eigenpair of the local quotient with the same descent as the nonlocal solver."""
    config = config or SolverConfig()
    if not 1 < p < math.inf:
        raise ValueError(f"p must lie in (1,inf), got {p}")
    if kx <= 0 or ky <= 0:
        raise ValueError("Kx and Ky must be positive")
    form = local_form(grid, p, kx, ky)
    quotient = _Quotient(form, p >= LOG_DOMAIN_P, config.preconditioner)
    starts = [_initial(grid.size, config.rng_seed + r) for r in range(config.restarts)]
    if config.warm_start is not None:
        starts[0] = np.array(config.warm_start.values, dtype=float)
    runs = [_descend(quotient, u0, config, record) for u0 in starts]
    u, f, loglam, iters, converged, history = min(runs, key=lambda r: r[2])
    lam = math.exp(p * loglam) if p * loglam < 700 else math.inf
    vals = sign_normalize(u)
    res = float(np.abs(form.operator(vals) - lam * np.sign(vals) * np.abs(vals) ** (p - 1)).max() * form.cell)
    return LocalEigenResult(lam, GridFunction(grid, vals), res, iters, converged, loglam, history)


def dense_fd_laplacian(grid):
    """Smallest eigenvalue of the 5-point Dirichlet Laplacian on the grid nodes.

    Assembled directly from lattice indices (missing neighbours are zero
    ghosts), independent of :class:`PowerForm`.
    """
    n = grid.size
    if n > DENSE_FD_CAP:
        raise TooLarge(f"{n} nodes exceed the dense cap of {DENSE_FD_CAP}")
    hx, hy = grid.h
    lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(grid.ix, grid.iy))}
    mat = np.zeros((n, n))
    for k, (i, j) in enumerate(zip(grid.ix, grid.iy)):
        mat[k, k] = 2.0 / hx**2 + 2.0 / hy**2
        for di, dj, h in ((1, 0, hx), (-1, 0, hx), (0, 1, hy), (0, -1, hy)):
            other = lookup.get((int(i) + di, int(j) + dj))
            if other is not None:
                mat[k, other] = -1.0 / h**2
    return float(linalg.eigh(mat, eigvals_only=True, subset_by_index=(0, 0))[0])


__all__ = [
    "BBMConstant", "LocalEigenResult", "bbm_constant", "bbm_s_values", "numeric_bbm", "gagliardo_1d",
    "local_energy", "local_energy_gradient", "local_form", "minimize_local_rayleigh", "dense_fd_laplacian",
]
