"""Semi-implicit Euler solver and structure diagnostics for the 2D Keller-Segel system."""
from .diagnostics import DiagRecord, dissipation_terms, energy, lp_norm, mass, regime_report
from .grid import (
    BackendKind,
    BcKind,
    Field,
    Grid,
    VectorField,
    dealias,
    divergence,
    gradient,
    laplacian,
    make_grid,
)
from .linsolve import KrylovConfig, advdiff_solve, helmholtz_solve
from .scheme import (
    InitialCondition,
    ModelParams,
    RunConfig,
    SchemeState,
    init_state,
    run,
    step,
    step_exponential,
)

__version__ = "0.1.0"

__all__ = [
    "BackendKind", "BcKind", "DiagRecord", "Field", "Grid", "InitialCondition", "KrylovConfig",
    "ModelParams", "RunConfig", "SchemeState", "VectorField", "advdiff_solve", "dealias",
    "dissipation_terms", "divergence", "energy", "gradient", "helmholtz_solve", "init_state",
    "laplacian", "lp_norm", "make_grid", "mass", "regime_report", "run", "step", "step_exponential",
]
