"""Solver and analysis toolkit for costly-information decision problems
with order-alpha information costs."""

from .analysis import (CertaintyReport, ConsiderationReport, CurvePoint,
                       ElasticityReport, IncentivePerturbation,
                       attention_elasticity_fd,
                       attention_elasticity_symmetric, certainty_events,
                       consideration_set, ipc, posterior_odds,
                       ucc_closed_form_binary, ucc_derivative_binary,
                       ucc_general)
from .errors import (AlphaIsOne, AlphariError, BoundarySupport,
                     DimensionMismatch, DualBoundViolation,
                     GridTooCoarse, MaxIterationsExceeded,
                     NewtonDiverged, NonDifferentiablePoint,
                     NonPositiveAlpha, NonPositiveKappa,
                     NonStochasticPrior, NotConverged, NotSymmetric,
                     OutOfRange, WrongDimensions)
from .infomeasures import (Barycenter, alpha_mutual_information,
                           barycenter, renyi_divergence,
                           shannon_mutual_information, transformed_cost)
from .oracle import (OracleResult, foc_1d_binary_symmetric,
                     grid_solve_2x2, projected_gradient_solve)
from .problem import (DecisionProblem, Experiment, Posterior,
                      SymmetricTrackingProblem, build_problem,
                      expected_utility, load_problem, problem_to_dict,
                      utility_bounds, validate_problem)
from .serialize import (Curve, read_curve, read_solution, recertify,
                        solution_from_dict, solution_to_dict,
                        write_curve, write_solution)
from .solver import (DualVariables, IterationRecord, KktCertificate,
                     Solution, SolverOptions, certify, dual_jacobian,
                     dual_residual, solve, solve_duals, tilt_function,
                     update_experiment)

__version__ = "0.1.0"

__all__ = [
    "AlphaIsOne", "AlphariError", "Barycenter", "BoundarySupport",
    "CertaintyReport", "ConsiderationReport", "Curve", "CurvePoint",
    "DecisionProblem", "DimensionMismatch", "DualBoundViolation",
    "DualVariables", "ElasticityReport", "Experiment", "GridTooCoarse",
    "IncentivePerturbation", "IterationRecord", "KktCertificate",
    "MaxIterationsExceeded", "NewtonDiverged", "NonDifferentiablePoint",
    "NonPositiveAlpha", "NonPositiveKappa", "NonStochasticPrior",
    "NotConverged", "NotSymmetric", "OracleResult", "OutOfRange",
    "Posterior", "Solution", "SolverOptions",
    "SymmetricTrackingProblem", "WrongDimensions",
    "alpha_mutual_information", "attention_elasticity_fd",
    "attention_elasticity_symmetric", "barycenter", "build_problem",
    "certainty_events", "certify", "consideration_set",
    "dual_jacobian", "dual_residual", "expected_utility",
    "foc_1d_binary_symmetric", "grid_solve_2x2", "ipc", "load_problem",
    "posterior_odds", "problem_to_dict", "projected_gradient_solve",
    "read_curve", "read_solution", "recertify", "renyi_divergence",
    "shannon_mutual_information", "solution_from_dict",
    "solution_to_dict", "solve", "solve_duals",
    "transformed_cost", "tilt_function", "ucc_closed_form_binary",
    "ucc_derivative_binary", "ucc_general", "update_experiment",
    "utility_bounds", "validate_problem", "write_curve",
    "write_solution",
]
