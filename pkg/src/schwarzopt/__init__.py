"""Nonlinear Schwarz preconditioned Newton solvers for bound-constrained
finite-element optimization problems on the unit square."""

from .mesh import Mesh, FeSpace, build_structured_mesh, classify_boundary, element_quadrature
from .problems import (
    BoxBounds,
    Problem,
    make_problem,
    ignition_problem,
    minimal_surface_problem,
    evaluate_bounds,
    validate_feasibility,
    InfeasibleProblemError,
)
from .linalg import project_box, projected_gradient, solve_spd, IndefiniteMatrixError
from .linesearch import LineSearchConfig, LineSearchResult, armijo
from .qp import BoxQp, QpResult, solve_box_qp
from .decomposition import (
    Decomposition,
    build_decomposition,
    partition,
    extend_overlap,
    free_adjacency,
    build_transfer,
    extract_local,
    load_partition_file,
    PartitionError,
)
from .coarse import (
    CoarseHierarchy,
    CoarseProblem,
    build_hierarchy,
    project_constraints,
    make_coarse_problem,
    coarse_step,
)
from .solvers import (
    SolverConfig,
    ConvergenceRecord,
    nrasb_step,
    tl_nrasb_step,
    newton_sqp_solve,
    semismooth_newton_solve,
    raspnb_solve,
    run_preconditioner_only,
)

__all__ = [
    "Mesh", "FeSpace", "build_structured_mesh", "classify_boundary", "element_quadrature",
    "BoxBounds", "Problem", "make_problem", "ignition_problem", "minimal_surface_problem",
    "evaluate_bounds", "validate_feasibility", "InfeasibleProblemError",
    "project_box", "projected_gradient", "solve_spd", "IndefiniteMatrixError",
    "LineSearchConfig", "LineSearchResult", "armijo",
    "BoxQp", "QpResult", "solve_box_qp",
    "Decomposition", "build_decomposition", "partition", "extend_overlap",
    "free_adjacency", "build_transfer", "extract_local", "load_partition_file",
    "PartitionError",
    "CoarseHierarchy", "CoarseProblem", "build_hierarchy", "project_constraints",
    "make_coarse_problem", "coarse_step",
    "SolverConfig", "ConvergenceRecord", "nrasb_step", "tl_nrasb_step",
    "newton_sqp_solve", "semismooth_newton_solve", "raspnb_solve",
    "run_preconditioner_only",
]
