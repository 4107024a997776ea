"""Derivative-free trust-region optimization over convex feasible sets.

The package is organized around the pieces a model-based DFO method needs
when every sample must stay feasible:

* :mod:`convexdfo.geometry` -- feasible regions, membership, projections.
* :mod:`convexdfo.linear_models` -- linear regression models and their
  Lagrange polynomials.
* :mod:`convexdfo.quadratic_models` -- minimum-Frobenius-norm quadratic
  interpolation, the bordered KKT system, determinant update identities.
* :mod:`convexdfo.poisedness` -- geometry certificates and constructive
  repair of interpolation sets.
* :mod:`convexdfo.subproblems` -- criticality measure and trust-region step.
* :mod:`convexdfo.solver` -- the trust-region driver.
* :mod:`convexdfo.problems` -- benchmark objectives for the harness.
* :mod:`convexdfo.cli` -- command-line front end.
"""

from .geometry import (
    Ball,
    Box,
    ConvexRegion,
    Halfspaces,
    Intersection,
    ProjectionError,
    ProjectionResult,
    WholeSpace,
    contains,
    parse_region,
    project,
    project_onto_ball_intersection,
)
from .linear_models import (
    DegenerateGeometryError,
    InterpolationSet,
    LinearModel,
    RegressionBasis,
    build_design_matrix,
    eval_regression_lagrange,
    fit_regression_model,
)
from .poisedness import (
    PoisednessCertificate,
    check_poisedness,
    improve_to_poised,
    initial_invertible_set,
    maximize_abs_lagrange,
)
from .quadratic_models import (
    MfnSystem,
    QuadraticModel,
    SingularGeometryError,
    assemble_system,
    det_after_point_swap,
    eval_mfn_lagrange,
    fit_mfn_model,
)
from .solver import RunRecord, SolverConfig, SolverError, solve
from .subproblems import criticality_measure, solve_trust_region_step

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Box",
    "ConvexRegion",
    "Halfspaces",
    "Intersection",
    "ProjectionError",
    "ProjectionResult",
    "WholeSpace",
    "contains",
    "parse_region",
    "project",
    "project_onto_ball_intersection",
    "DegenerateGeometryError",
    "InterpolationSet",
    "LinearModel",
    "RegressionBasis",
    "build_design_matrix",
    "eval_regression_lagrange",
    "fit_regression_model",
    "PoisednessCertificate",
    "check_poisedness",
    "improve_to_poised",
    "initial_invertible_set",
    "maximize_abs_lagrange",
    "MfnSystem",
    "QuadraticModel",
    "SingularGeometryError",
    "assemble_system",
    "det_after_point_swap",
    "eval_mfn_lagrange",
    "fit_mfn_model",
    "RunRecord",
    "SolverConfig",
    "SolverError",
    "solve",
    "criticality_measure",
    "solve_trust_region_step",
]
