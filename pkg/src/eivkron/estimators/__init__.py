"""Corrected-gram surrogates, the two estimators, a grid oracle and penalty plans."""
from .conic import conic_min_t, conic_objective, is_feasible, solve_conic
from .gram import (GramPair, corrected_gram, estimate_tau_B, gram_from_data, residual_infnorm,
                   residual_infnorm_from_data)
from .lasso import lasso_objective, solve_lasso
from .oracle import ConicProblem, LassoProblem, grid_oracle
from .penalties import PenaltyMode, PenaltyPlan, pilot_residuals, theory_lambda
from .prox import project_l1_ball, prox_l1_ball, soft_threshold
from .result import SolveResult, feasibility_summary

__all__ = [
    "ConicProblem", "GramPair", "LassoProblem", "PenaltyMode", "PenaltyPlan", "SolveResult",
    "conic_min_t", "conic_objective", "corrected_gram", "estimate_tau_B", "feasibility_summary",
    "gram_from_data", "grid_oracle", "is_feasible", "lasso_objective", "pilot_residuals",
    "project_l1_ball", "prox_l1_ball", "residual_infnorm", "residual_infnorm_from_data",
    "soft_threshold", "solve_conic", "solve_lasso", "theory_lambda",
]
