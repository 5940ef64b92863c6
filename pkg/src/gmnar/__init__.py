"""Group matrix network autoregression (GMNAR): simulation, alternating
least-squares estimation with latent two-way group structure, QIC group
number selection, and asymptotic inference."""

__version__ = "0.1.0"

from .model import (GroupAssignment, MatrixSeries, NetworkPair, ParameterSet,
                    build_regressor, check_stationarity, objective_q,
                    one_step_mean)
from .netgen import NetworkSpec, gen_powerlaw, gen_sbm, normalize
from .simulate import SimConfig, scenario_preset, simulate_gmnar
from .estimate import (FitOptions, FitResult, NormalEquations,
                       assemble_normal_equations, fit, init_memberships,
                       solve_theta, update_col_memberships,
                       update_row_memberships)
from .select import penalty_eta, qic, select_group_numbers
from .inference import InferenceResult, confidence_intervals, covariance, infer
from . import metrics

__all__ = [
    "GroupAssignment", "MatrixSeries", "NetworkPair", "ParameterSet",
    "build_regressor", "check_stationarity", "objective_q", "one_step_mean",
    "NetworkSpec", "gen_sbm", "gen_powerlaw", "normalize",
    "SimConfig", "scenario_preset", "simulate_gmnar",
    "FitOptions", "FitResult", "NormalEquations",
    "assemble_normal_equations", "fit", "init_memberships", "solve_theta",
    "update_row_memberships", "update_col_memberships",
    "penalty_eta", "qic", "select_group_numbers",
    "InferenceResult", "confidence_intervals", "covariance", "infer",
    "metrics",
]
