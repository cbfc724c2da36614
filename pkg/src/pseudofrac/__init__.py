"""First eigenvalue of the anisotropic fractional pseudo p-Laplacian on planar domains.

Grids, discrete energies, a Rayleigh-quotient eigensolver, the local and
p -> infinity limits, inequality checks and parameter sweeps.
"""

from .eigensolver import EigenResult, SolverConfig, minimize_rayleigh
from .energy import FracParams, GridFunction, rayleigh, seminorm_infty, seminorm_p
from .errors import (
    BadExponents, DomainError, DomainParseError, EmptyGrid, GridMismatch, NonProductDomain,
    PseudoFracError, TooLarge, UnsupportedBlock, UnsupportedDims, ZeroFunction,
)
from .geometry import DomainSpec, Grid, build_grid, compute_Rs, lambda_infinity, parse_domain
from .harness import diagram_check, sweep_p, sweep_s
from .local_limit import bbm_constant, minimize_local_rayleigh

__version__ = "0.1.0"

__all__ = [
    "BadExponents", "DomainError", "DomainParseError", "DomainSpec", "EigenResult", "EmptyGrid",
    "FracParams", "Grid", "GridFunction", "GridMismatch", "NonProductDomain", "PseudoFracError",
    "SolverConfig", "TooLarge", "UnsupportedBlock", "UnsupportedDims", "ZeroFunction", "bbm_constant",
    "build_grid", "compute_Rs", "diagram_check", "lambda_infinity", "minimize_local_rayleigh",
    "minimize_rayleigh", "parse_domain", "rayleigh", "seminorm_infty", "seminorm_p", "sweep_p", "sweep_s",
]
