"""Solver and estimate checker for the plasma density problem on unit-area planar domains."""
from .domain import Domain, DomainSpec, disk, ell, normalize, rectangle, square
from .elliptic import (
    GreenOperator,
    ScalarField,
    dirichlet_energy,
    green_operator,
    green_point,
    kappa,
    kp_constant,
    poisson_solve,
)
from .estimates import EstimateEntry, EstimateReport, evaluate, g_lower_bound, k_tilde
from .levelset import LevelSetProfile, check_integrated_inequality, profile
from .radial import RadialSolution, disk_threshold, solve_disk_radial
from .sobolev import SobolevResult, best_constant, lambda_star
from .solver import (
    FreeBoundarySolution,
    PlasmaSolution,
    SolveOptions,
    from_free_boundary,
    solve_alpha_zero,
    solve_plm,
    to_free_boundary,
)
from .variational import Density, VariationalResult, free_energy, minimize_J, positivity_threshold

__all__ = [name for name in dir() if not name.startswith("_")]
