"""Explicit heat kernels on generalized diamond fractals.

The level spaces ``F_i`` are quantum graphs built from the base circle by
cutting it into ``2 J_i`` arcs and duplicating each into ``N_i`` strands; the
diamond fractal is their inverse limit.  This package evaluates the heat and
Schrodinger kernels of those spaces in closed form with certified truncation,
and checks them against independent discretizations.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    DiamondHeatError,
    DomainError,
    InsufficientDepthError,
    LevelRangeError,
    PrecisionWarning,
)
from .params import AssumptionReport, ParameterSequences, check_assumption, hausdorff_dimension
from .geometry import Address, CellWord, PairConfig, PointArray, classify_pair, deepest_common_bundle, locate, project
from .kernel1d import ComplexTime, EvalOptions, Method, circle_kernel, dirichlet_kernel
from .fractal_kernel import (
    KernelResult,
    heat_kernel_level,
    heat_kernel_limit,
    kernel_matrix,
    kernel_pairs,
    schrodinger_kernel,
    uniform_bound,
)
from .semigroup import GridField, ProjectionSplit, apply_semigroup, heat_solve, integrate, project_sym
from ._backend import NAME as backend

__all__ = [
    "Address",
    "AssumptionReport",
    "CapacityError",
    "CellWord",
    "ComplexTime",
    "ConfigError",
    "DiamondHeatError",
    "DomainError",
    "EvalOptions",
    "GridField",
    "InsufficientDepthError",
    "KernelResult",
    "LevelRangeError",
    "Method",
    "PairConfig",
    "ParameterSequences",
    "PointArray",
    "PrecisionWarning",
    "ProjectionSplit",
    "apply_semigroup",
    "backend",
    "check_assumption",
    "circle_kernel",
    "classify_pair",
    "deepest_common_bundle",
    "dirichlet_kernel",
    "hausdorff_dimension",
    "heat_kernel_level",
    "heat_kernel_limit",
    "heat_solve",
    "integrate",
    "kernel_matrix",
    "kernel_pairs",
    "locate",
    "project",
    "project_sym",
    "schrodinger_kernel",
    "uniform_bound",
]
