"""Two-timescale EXTRA for decentralized non-convex optimization."""

from .graph import Graph, complete, erdos_renyi_connected, is_connected, ring
from .mixing import MixingMatrix, build_w_tilde, laplacian_based, metropolis, psd_sqrt, validate_assumption2
from .params import StepSizes, select_parameters
from .problems import Problem, make_convex_quadratic, make_problem, make_regularized_ls, make_welsch_regression
from .solver import RunConfig, Trace, run

__all__ = [
    "Graph", "complete", "erdos_renyi_connected", "is_connected", "ring",
    "MixingMatrix", "build_w_tilde", "laplacian_based", "metropolis", "psd_sqrt", "validate_assumption2",
    "StepSizes", "select_parameters",
    "Problem", "make_convex_quadratic", "make_problem", "make_regularized_ls", "make_welsch_regression",
    "RunConfig", "Trace", "run",
]
