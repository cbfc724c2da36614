"""First eigenpair of the discrete nonlocal pseudo p-Laplacian.

The Rayleigh quotient ``E(u) / ||u||_p^p`` is minimised by preconditioned
gradient descent on the unit ``L^p`` sphere: step along the negative gradient in
a curvature metric, backtrack until the Armijo condition holds, renormalise.
The first trial step of each iteration is a Barzilai-Borwein estimate, or 1 for
a projected Newton step.  For ``p >= 32`` the objective is the log-quotient so
that p-th powers never overflow.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .energy import FracParams, GridFunction, _logsumexp, form_H, lp_norm, seminorm_p, total_form
from .errors import TooLarge


LOG_DOMAIN_P = 32.0
CONTINUATION_P = 16.0
# "auto" picks Newton for sparse Hessians (local energies) and Jacobi once the
# pair count exceeds this fraction of size^2 (nonlocal energies), where sparse
# factorisation fills in
DENSE_PAIRS_PER_NODE = 4  # a 5-point form has at most 2 pairs per node
PRECONDITIONERS = ("auto", "newton", "hessian", "jacobi", "none")
DENSE_CAP = 2500


@dataclass
class SolverConfig:
    max_iters: int = 20000
    grad_tol: float = 1e-8
    step_init: float = 1.0
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    restarts: int = 1
    rng_seed: int = 0
    warm_start: GridFunction | None = None
    threads: int | None = None
    preconditioner: str = "auto"

    def __post_init__(self):
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.armijo_c < 1 or not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_c and armijo_shrink must lie in (0,1)")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass
class EigenResult:
    lam: float
    u: GridFunction
    residual: float
    iterations: int
    converged: bool
    log_lambda_over_p: float
    p: float = 2.0
    history: list = field(default_factory=list, repr=False)

    @property
    def scaled_lambda(self):
        """``lambda^(1/p)`` from the log record."""
        return math.exp(self.log_lambda_over_p)

    def to_dict(self, csv_path=None):
        return {
            "lambda": self.lam,
            "log_lambda_over_p": self.log_lambda_over_p,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "grid": self.u.grid.metadata(),
            "eigenfunction_csv": csv_path,
        }


def thread_count(requested=None):
    """Worker count from ``requested`` or ``PSEUDOFRAC_THREADS`` (0 = all cores)."""
    if requested is None:
        requested = int(os.environ.get("PSEUDOFRAC_THREADS", "1") or 1)
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


# ---------------------------------------------------------------------------
# descent engine, shared with the local limit problem


class _DiagonalMetric:
    def __init__(self, d):
        self.d = d

    def direction(self, g):
        return g / self.d, False

    def inner(self, x):
        return float(np.dot(x, self.d * x))


class _SparseMetric:
    """Positive definite sparse metric, optionally preceded by a projected Newton step.

    ``newton`` is the Hessian of the Lagrangian; the step solves it bordered by
    ``normal`` so it stays tangent to the constraint ``||u||_p = 1``.  When that
    step is not a descent direction (far from the minimiser) the positive
    definite ``mat`` is used instead.
    """

    def __init__(self, mat, newton=None, normal=None):
        self.mat = mat
        self.newton = newton
        self.normal = normal

    def direction(self, g):
        if self.newton is not None:
            d = self._newton(g)
            if d is not None and np.all(np.isfinite(d)) and np.dot(g, d) > 0:
                return d, True
        return splinalg.splu(self.mat).solve(g), False

    def _newton(self, g):
        border = self.normal[:, None]
        kkt = sparse.bmat([[self.newton, border], [border.T, None]], format="csc")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", splinalg.MatrixRankWarning)
            try:
                return splinalg.splu(kkt).solve(np.append(g, 0.0))[:-1]
            except RuntimeError:
                return None

    def inner(self, x):
        return float(np.dot(x, self.mat @ x))


class _Quotient:
    """Rayleigh quotient of a :class:`PowerForm`, raw or in the log domain."""

    def __init__(self, form, use_log, kind="auto"):
        if kind not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {kind!r}")
        if kind == "auto":
            # the diagonal metric stalls at the kinks |du| = 0 when p < 2
            dense = form.a.size > DENSE_PAIRS_PER_NODE * form.size
            kind = "jacobi" if dense and form.p >= 2 else "newton"
        self.kind = kind
        self.form = form
        self.p = form.p
        self.cell = form.cell
        self.use_log = use_log

    def normalize(self, u):
        top = np.abs(u).max()
        u = u / top
        return u / (np.sum(np.abs(u) ** self.p) * self.cell) ** (1.0 / self.p)

    def log_norm_power(self, u):
        with np.errstate(divide="ignore"):
            return _logsumexp(math.log(self.cell) + self.p * np.log(np.abs(u)))

    def value_grad(self, u):
        """Objective, its gradient, ``log(lambda)/p`` and the descent metric at ``u``."""
        p = self.p
        with np.errstate(divide="ignore"):
            lu = np.log(np.abs(u))
        if self.use_log:
            log_e = self.form.log_energy(u)
            log_n = self.log_norm_power(u)
            ge = self.form.scaled_gradient(u, log_e)
            gn = p * self.cell * np.sign(u) * np.exp((p - 1) * lu - log_n)
            f = loglam = (log_e - log_n) / p
            grad = (ge - gn) / p
            factor = 1.0 / p
            if self.kind != "none":
                dn = (p - 1) * self.cell * np.exp((p - 2) * lu - log_n)
        else:
            log_e = None
            e = self.form.energy(u)
            n = float(np.sum(np.abs(u) ** p) * self.cell)
            f = e / n
            grad = (self.form.gradient(u) - f * p * self.cell * np.sign(u) * np.abs(u) ** (p - 1)) / n
            loglam = math.log(f) / p if f > 0 else -math.inf
            factor = 1.0 / n
            if self.kind != "none":
                dn = f * p * (p - 1) * self.cell * np.abs(u) ** (p - 2) / n
        if self.kind == "none":
            return f, grad, loglam, _DiagonalMetric(np.full(u.size, self.cell))
        return f, grad, loglam, self._metric(u, lu, log_e, factor, dn)

    # Metrics.  For p < 2 the Hessian weights are floored (see
    # PowerForm.hessian_weights).  ``base`` is the Hessian
    # of the numerator and ``dn`` the diagonal Hessian of the denominator, both
    # scaled like the objective.  base + dn is positive definite up to a tiny
    # ridge; base - dn is the Hessian of the Lagrangian used by the Newton step.

    def _metric(self, u, lu, log_e, factor, dn):
        if self.kind == "jacobi":
            return self._jacobi(u, log_e, factor, dn)
        base = self.form.hessian_matrix(u, log_e) * factor
        top = float((base.diagonal() + dn).max())
        ridge = 1e-12 * top if top > 0 else self.cell
        mat = (base + sparse.diags(dn + ridge)).tocsc()
        if self.kind != "newton":
            return _SparseMetric(mat)
        finite = np.isfinite(lu)
        normal = np.zeros(u.size)
        normal[finite] = np.sign(u[finite]) * np.exp((self.p - 1) * (lu[finite] - lu[finite].max()))
        return _SparseMetric(mat, (base - sparse.diags(dn)).tocsc(), normal)

    def _jacobi(self, u, log_e, factor, dn):
        pair, single = self.form.hessian_weights(u, log_e)
        d = np.bincount(self.form.a, pair, u.size) + np.bincount(self.form.b, pair, u.size) + single
        d = d * factor + dn
        top = d.max()
        return _DiagonalMetric(np.maximum(d, 1e-12 * top) if top > 0 else np.full(u.size, self.cell))

    def value(self, u):
        if self.use_log:
            return (self.form.log_energy(u) - self.log_norm_power(u)) / self.p
        return self.form.energy(u) / float(np.sum(np.abs(u) ** self.p) * self.cell)

    def stationarity(self, grad, f):
        """Area-weighted norm of the quotient gradient and the stopping scale ``max(1, lambda)``.

        In log mode both are divided by lambda so nothing overflows.
        """
        g = np.sqrt(np.sum((grad / self.cell) ** 2) * self.cell)
        if self.use_log:
            # grad of log-quotient = grad R / (p R)
            lam_log = self.p * f
            scale = math.exp(-lam_log) if lam_log < 0 else 1.0
            return self.p * g, min(scale, 1e300)
        return g, max(1.0, f)


def _descend(quotient, u0, config, record=False):
    u = quotient.normalize(np.asarray(u0, dtype=float))
    f, grad, loglam, w = quotient.value_grad(u)
    history = [f] if record else []
    step = config.step_init
    prev_u = prev_g = None
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        gnorm, scale = quotient.stationarity(grad, f)
        if gnorm <= config.grad_tol * scale:
            converged = True
            it -= 1
            break
        direction, newton = w.direction(grad)
        slope = float(np.dot(grad, direction))
        if newton:
            step = 1.0
        elif prev_u is not None:
            su = u - prev_u
            denom = float(np.dot(su, grad - prev_g))
            step = w.inner(su) / denom if denom > 0 else config.step_init
        else:
            step = config.step_init
        step = min(max(step, 1e-300), 1e300)
        accepted = False
        for _ in range(200):
            trial = u - step * direction
            if np.any(trial):
                ft = quotient.value(trial)
                if ft <= f - config.armijo_c * step * slope:
                    accepted = True
                    break
            step *= config.armijo_shrink
        if not accepted:
            break
        prev_u, prev_g = u, grad
        u = quotient.normalize(trial)
        f, grad, loglam, w = quotient.value_grad(u)
        if record:
            history.append(f)
    else:
        gnorm, scale = quotient.stationarity(grad, f)
        converged = gnorm <= config.grad_tol * scale
        it = config.max_iters
    return u, f, loglam, it, converged, history


def _initial(size, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.5, 1.5, size)


def _continuation_stages(p):
    """Smaller exponents ``..., p/4, p/2`` (all >= 4) visited before ``p`` on a cold start."""
    stages = []
    q = p / 2
    while q >= 4:
        stages.append(q)
        q /= 2
    return stages[::-1]


def _cold_start(grid, params, config):
    """Random data pushed through a p-continuation when ``p`` is large.

    At large p the maximum of the minimiser sits on a tightly coupled cluster of
    nodes that diagonal preconditioning cannot resolve from rough data; the
    minimiser for p/2 is already close.
    """
    if params.p < CONTINUATION_P:
        return lambda u0: u0
    loose = replace(config, grad_tol=max(config.grad_tol, 1e-6), warm_start=None)
    quotients = [
        _Quotient(total_form(grid, FracParams(params.s, q, params.rule)), q >= LOG_DOMAIN_P, config.preconditioner)
        for q in _continuation_stages(params.p)
    ]

    def run(u0):
        for quotient in quotients:
            u0 = _descend(quotient, u0, loose)[0]
        return u0

    return run


def _run_restarts(grid, params, config, record):
    quotient = _Quotient(total_form(grid, params), params.p >= LOG_DOMAIN_P, config.preconditioner)
    prepare = _cold_start(grid, params, config)

    def one(job):
        u0, cold = job
        return _descend(quotient, prepare(u0) if cold else u0, config, record)

    jobs = [(_initial(grid.size, config.rng_seed + r), True) for r in range(config.restarts)]
    if config.warm_start is not None:
        # the warm start takes the place of the first random start
        jobs[0] = (np.array(config.warm_start.values, dtype=float), False)
    workers = min(thread_count(config.threads), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, jobs))
    return [one(job) for job in jobs]


def sign_normalize(values):
    values = np.asarray(values, dtype=float)
    return -values if values.sum() < 0 else values


def minimize_rayleigh(grid, params, config=None, record=False):
    """Approximate ``lambda_1(s, p)`` and a positive eigenfunction with ``||u||_p = 1``.

    Runs ``config.restarts`` descents from positive random data, the first one
    replaced by the warm start if given, and keeps the lowest quotient.  Non-convergence is reported
    through ``converged=False``.
    """
    config = config or SolverConfig()
    runs = _run_restarts(grid, params, config, record)
    best = min(runs, key=lambda r: r[2])
    u, f, loglam, iters, converged, history = best
    u = GridFunction(grid, sign_normalize(u))
    lam = math.exp(params.p * loglam) if params.p * loglam < 700 else math.inf
    res = weak_residual(u, lam, params) if math.isfinite(lam) else math.nan
    return EigenResult(
        lam=lam, u=u, residual=res, iterations=iters, converged=converged,
        log_lambda_over_p=loglam, p=params.p, history=history,
    )


def minimize_rayleigh_all(grid, params, config=None):
    """Like :func:`minimize_rayleigh` but return one result per restart (restart order)."""
    config = config or SolverConfig()
    out = []
    for u, f, loglam, iters, converged, _ in _run_restarts(grid, params, config, False):
        uf = GridFunction(grid, sign_normalize(u))
        lam = math.exp(params.p * loglam)
        out.append(EigenResult(lam, uf, weak_residual(uf, lam, params), iters, converged, loglam, params.p))
    return out


def weak_residual(u, lam, params):
    """``max_i |H(u, e_i) - lam (u_i)^(p-1) cell|`` over nodal indicator functions."""
    form = total_form(u.grid, params)
    vals = u.values
    lhs = form.operator(vals) * form.cell
    rhs = lam * np.sign(vals) * np.abs(vals) ** (params.p - 1) * form.cell
    return float(np.abs(lhs - rhs).max())


def assemble_p2(grid, s, rule="corrected"):
    """Stiffness matrix ``A[i, k] = H(e_i, e_k)`` for p = 2."""
    if grid.size > DENSE_CAP:
        raise TooLarge(f"{grid.size} nodes exceed the dense cap of {DENSE_CAP}")
    form = total_form(grid, FracParams(s, 2.0, rule))
    eye = np.eye(grid.size)
    return np.column_stack([form.operator(eye[k]) * form.cell for k in range(grid.size)])


def dense_p2_oracle(grid, s, rule="corrected", tol=1e-15, max_iters=100000):
    """Smallest generalised eigenpair of ``(A, cell * I)`` by inverse iteration from all ones."""
    a = assemble_p2(grid, s, rule)
    a = 0.5 * (a + a.T)
    cell = grid.cell_area
    chol = linalg.cho_factor(a)
    x = np.ones(grid.size)
    x /= np.sqrt(cell * x @ x)
    lam = float(x @ a @ x) / (cell * x @ x)
    for _ in range(max_iters):
        y = linalg.cho_solve(chol, cell * x)
        y /= np.sqrt(cell * y @ y)
        new = float(y @ a @ y) / (cell * y @ y)
        done = abs(new - lam) <= tol * new and np.abs(y - x).max() < 1e-13
        x, lam = y, new
        if done:
            break
    return lam, GridFunction(grid, sign_normalize(x))


@dataclass
class CheckReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)


def check_simplicity(results, rel_tol_lambda, tol_u):
    """All eigenvalues agree to ``rel_tol_lambda`` and sign-normalised eigenfunctions to ``tol_u``."""
    if len(results) < 2:
        raise ValueError("need at least two results")
    lams = np.array([r.lam for r in results])
    spread = float((lams.max() - lams.min()) / lams.min())
    ref = sign_normalize(results[0].u.values)
    sup = max(float(np.abs(sign_normalize(r.u.values) - ref).max()) for r in results)
    failures = []
    if not spread <= rel_tol_lambda:
        failures.append(f"eigenvalue spread {spread:.3e} > {rel_tol_lambda:.1e}")
    if not sup <= tol_u:
        failures.append(f"eigenfunction disagreement {sup:.3e} > {tol_u:.1e}")
    unconverged = [i for i, r in enumerate(results) if not r.converged]
    if unconverged:
        failures.append(f"unconverged restarts {unconverged}")
    return CheckReport(
        "simplicity", not failures, {"lambda_spread": spread, "u_sup_disagreement": sup}, failures
    )


def check_positivity(u):
    vals = sign_normalize(u.values)
    bad = np.flatnonzero(vals <= 0)
    return CheckReport(
        "positivity",
        bad.size == 0,
        {"min_value": float(vals.min()), "nonpositive_nodes": int(bad.size)},
        [f"node {int(i)} has value {vals[i]:.3e}" for i in bad[:10]],
    )


def poincare_lower_bound(domain, params):
    """``2 (2 diam)^(-sp) / (sp)``, the lower bound for lambda_1 with omega_1 = 2."""
    return 2.0 * (2.0 * domain.diameter()) ** (-params.sp) / params.sp


__all__ = [
    "SolverConfig", "EigenResult", "minimize_rayleigh", "minimize_rayleigh_all", "weak_residual",
    "dense_p2_oracle", "assemble_p2", "check_simplicity", "check_positivity", "poincare_lower_bound",
    "sign_normalize", "form_H", "seminorm_p", "lp_norm",
]
