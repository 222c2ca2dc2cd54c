"""Multivariate pair-trading research engine.

Builds portfolio weight vectors that trade off model fit against series
volatility, derives participation signals from forecast-interval coverage,
and backtests them against classical cointegration baselines.
"""

from .ar_forecast import ArModel, ForecastPath, fit_ar, forecast
from .backtester import (
    ALL_METHODS,
    BacktestReport,
    StrategyConfig,
    TradeDecision,
    metric_table,
    run_backtest,
    run_trade,
)
from .errors import VmatError
from .lambda_select import DEFAULT_LAMBDA_GRID, LambdaGrid, SelectionOutcome, select_cv, select_tame
from .market_data import FormationWindow, PricePanel, load_csv, log_window
from .signal_engine import Signal, ThresholdPair, ar_thresholds, make_signal, stationary_thresholds
from .synthgen import ExtraFactor, SynthSpec, generate
from .weight_solver import (
    PortfolioWeights,
    TradeoffObjective,
    coint_weights,
    direction_angle,
    k_matrix,
    maxvar_weights,
    objective_value,
    vmat_descent,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "ArModel",
    "BacktestReport",
    "DEFAULT_LAMBDA_GRID",
    "ExtraFactor",
    "ForecastPath",
    "FormationWindow",
    "LambdaGrid",
    "PortfolioWeights",
    "PricePanel",
    "SelectionOutcome",
    "Signal",
    "StrategyConfig",
    "SynthSpec",
    "ThresholdPair",
    "TradeDecision",
    "TradeoffObjective",
    "VmatError",
    "ar_thresholds",
    "coint_weights",
    "direction_angle",
    "fit_ar",
    "forecast",
    "generate",
    "k_matrix",
    "load_csv",
    "log_window",
    "make_signal",
    "maxvar_weights",
    "metric_table",
    "objective_value",
    "run_backtest",
    "run_trade",
    "select_cv",
    "select_tame",
    "stationary_thresholds",
    "vmat_descent",
]
