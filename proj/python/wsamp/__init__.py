"""Threshold sampling of a Wiener process over a random-delay channel.

Thin re-export of the compiled core: delay models, the threshold solvers,
the moment functionals behind them, the cycle simulator, and the
stopping-time Monte Carlo oracle.
"""

from ._core import (
    Binding,
    DelayModel,
    Estimate,
    FrequencyConstraint,
    PolicyKind,
    PolicySpec,
    SimulationResult,
    SolverError,
    ThresholdSolution,
    WaldMoments,
    __version__,
    default_dt,
    e_max_beta2_wy4,
    e_max_beta2_y2,
    e_max_beta_wy2,
    e_max_beta_y,
    mmse_age_value,
    mmse_opt_value,
    parse_delay_model,
    parse_policy,
    run_cycles,
    small_fmax_ratio,
    solve_beta_age,
    solve_beta_mmse,
    wald_fixed_time,
    wald_hitting,
    zero_wait_age_optimal,
    zero_wait_mmse_optimal,
)

__all__ = [
    "Binding",
    "DelayModel",
    "Estimate",
    "FrequencyConstraint",
    "PolicyKind",
    "PolicySpec",
    "SimulationResult",
    "SolverError",
    "ThresholdSolution",
    "WaldMoments",
    "__version__",
    "default_dt",
    "e_max_beta2_wy4",
    "e_max_beta2_y2",
    "e_max_beta_wy2",
    "e_max_beta_y",
    "mmse_age_value",
    "mmse_opt_value",
    "parse_delay_model",
    "parse_policy",
    "run_cycles",
    "small_fmax_ratio",
    "solve_beta_age",
    "solve_beta_mmse",
    "wald_fixed_time",
    "wald_hitting",
    "zero_wait_age_optimal",
    "zero_wait_mmse_optimal",
]
