"""Risk-cost decision engine for adaptive authentication."""

from ._rcm import (
    Action,
    DomainError,
    accept_threshold,
    action_risks,
    apply_platt,
    bayes_action,
    cvar,
    cvar_dual,
    drift_index,
    ece,
    fit_isotonic,
    fit_platt,
    run_simulation,
    value_of_information,
    worst_case_mean_chi2,
    worst_case_mean_tv,
)

__all__ = [
    "Action",
    "DomainError",
    "accept_threshold",
    "action_risks",
    "apply_platt",
    "bayes_action",
    "cvar",
    "cvar_dual",
    "drift_index",
    "ece",
    "fit_isotonic",
    "fit_platt",
    "run_simulation",
    "value_of_information",
    "worst_case_mean_chi2",
    "worst_case_mean_tv",
]
