"""Bayesian intraday FX volatility: Gibbs sampler, baselines, forecast evaluation and GMVP backtests."""

from ._fxvol import (
    FxvolError,
    ModelParams,
    PriorConfig,
    annualize,
    annualized_stats,
    cli,
    diebold_mariano,
    fit_ar1_rv,
    fit_garch11,
    fit_gjr_garch,
    fit_har,
    gmvp_weight,
    horse_race,
    log_chi2_mixture,
    run_chain,
    simulate,
    sinusoidal_seasonal,
)

__version__ = "0.1.0"

__all__ = [
    "FxvolError",
    "ModelParams",
    "PriorConfig",
    "annualize",
    "annualized_stats",
    "cli",
    "diebold_mariano",
    "fit_ar1_rv",
    "fit_garch11",
    "fit_gjr_garch",
    "fit_har",
    "gmvp_weight",
    "horse_race",
    "log_chi2_mixture",
    "run_chain",
    "simulate",
    "sinusoidal_seasonal",
]
