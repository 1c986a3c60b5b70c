"""Global minimization of a squared distance over weakly convex constraints.

The feasible set is approximated from outside by quadratic cuts, each the
complement of a ball, and the approximation is refined until its closest point
to the center is feasible.
"""

from .cuts import OuterApproximation, QuadraticCut, build_cut, linearize_at_level
from .errors import CutSpheresError
from .geometry import GeometryConfig, Polyhedron, project_onto_polyhedron, sphere_polyhedron_feasibility
from .model import Problem, WeaklyConvexConstraint, reformulate, violated_set
from .solver import (
    SolveResult,
    SolverConfig,
    Status,
    check_dimension_condition,
    check_kkt_certificate,
    infeasibility_diagnostic,
    solve,
    solve_exact,
    solve_inexact,
    solve_warm,
)

__all__ = [
    "CutSpheresError",
    "GeometryConfig",
    "OuterApproximation",
    "Polyhedron",
    "Problem",
    "QuadraticCut",
    "SolveResult",
    "SolverConfig",
    "Status",
    "WeaklyConvexConstraint",
    "build_cut",
    "check_dimension_condition",
    "check_kkt_certificate",
    "infeasibility_diagnostic",
    "linearize_at_level",
    "project_onto_polyhedron",
    "reformulate",
    "solve",
    "solve_exact",
    "solve_inexact",
    "solve_warm",
    "sphere_polyhedron_feasibility",
    "violated_set",
]
