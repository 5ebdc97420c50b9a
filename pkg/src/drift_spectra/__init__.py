"""Drift-Laplacian spectra on weighted intervals and collapsing thin domains."""

__version__ = "0.1.0"

from .errors import (AssemblyError, CheckFailure, ConfigError,
                     DriftSpectraError, EvalDomainError, ExprSyntaxError,
                     MeshError, ReferenceNotConverged, SolverError)
from .expr import Expr, diff_expr, eval_expr, parse_expr, pretty
from .weights import WeightSpec
from .mesh import (IntervalDomain, IntervalMesh, MappedGrid, ThinDomainSpec,
                   build_interval_mesh, build_mapped_grid)
from .assembly import (OperatorPencil, assemble_dirichlet_1d,
                       assemble_drift_1d, assemble_thin_2d)
from .eigensolve import (SolveOptions, SpectrumResult, solve_dense,
                         solve_iterative, solve_smallest)
from .experiments import (ConvergenceReport, GapReport, Prop2Report,
                          Prop4Report, ResidualReport, convergence_study,
                          corollary1_harness, drift_spectrum,
                          eigenfunction_residual, gap_check, prop2_check,
                          prop4_trials, thin_spectrum)
from .config import JobConfig, build_config, load_config

__all__ = [
    "AssemblyError", "CheckFailure", "ConfigError", "ConvergenceReport",
    "DriftSpectraError", "EvalDomainError", "Expr", "ExprSyntaxError",
    "GapReport", "IntervalDomain", "IntervalMesh", "JobConfig", "MappedGrid",
    "MeshError", "OperatorPencil", "Prop2Report", "Prop4Report",
    "ReferenceNotConverged", "ResidualReport", "SolveOptions", "SolverError",
    "SpectrumResult", "ThinDomainSpec", "WeightSpec", "build_config",
    "build_interval_mesh", "build_mapped_grid", "assemble_dirichlet_1d",
    "assemble_drift_1d", "assemble_thin_2d", "convergence_study",
    "corollary1_harness", "diff_expr", "drift_spectrum",
    "eigenfunction_residual", "eval_expr", "gap_check", "load_config",
    "parse_expr", "pretty", "prop2_check", "prop4_trials", "solve_dense",
    "solve_iterative", "solve_smallest", "thin_spectrum",
]
