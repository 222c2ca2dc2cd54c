"""Backtest harness: one independent decision per evaluation day.

Every evaluation time t gets its own formation window, weight vector,
thresholds and signal; positions entered on different days may overlap and
never share state, so days can be evaluated in parallel with identical
results at any worker count.  An open position is closed greedily at the
first day it shows a profit on the combined series, otherwise
marked-to-market at the horizon d.

The greedy exit condition is stated on the portfolio series,
``delta * (y_{t+k} - y_t) > 0``: a componentwise price comparison is
ill-defined for a weight vector with shorts, while the portfolio reading
matches the realized log return being booked.

Pathological days (constant windows, explosive fits, degenerate
thresholds) are recorded as no-signal decisions with a diagnostic rather
than aborting the run.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import multiprocessing
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .ar_forecast import fit_ar, forecast
from .errors import TradeDegeneracy
from .lambda_select import (
    DEFAULT_LAMBDA_GRID,
    MODE_CV,
    MODE_FIXED,
    MODE_TAME,
    LambdaGrid,
    SelectionOutcome,
    select_cv,
    select_tame,
)
from .market_data import PricePanel
from .signal_engine import (
    CONVENTION_LITERAL,
    ThresholdPair,
    ar_thresholds,
    make_signal,
    stationary_thresholds,
)
from .weight_solver import (
    INIT_COINT,
    INIT_MAXVAR,
    UNIT_L1,
    PortfolioWeights,
    TradeoffObjective,
    coint_weights,
    maxvar_weights,
    vmat_descent,
)

METHOD_COINT = "coint"
METHOD_COINT_AR = "coint_ar"
METHOD_MAXVAR_AR = "maxvar_ar"
METHOD_VMAT = "vmat"
METHOD_VMAT_CV = "vmat_cv"
METHOD_VMAT_TAME = "vmat_tame"

ALL_METHODS = (
    METHOD_COINT,
    METHOD_COINT_AR,
    METHOD_MAXVAR_AR,
    METHOD_VMAT,
    METHOD_VMAT_CV,
    METHOD_VMAT_TAME,
)

DISPLAY_NAMES = {
    METHOD_COINT: "Coint",
    METHOD_COINT_AR: "Coint AR",
    METHOD_MAXVAR_AR: "MaxVar AR",
    METHOD_VMAT: "VMAT",
    METHOD_VMAT_CV: "VMAT CV",
    METHOD_VMAT_TAME: "VMAT Tame",
}

_VMAT_FAMILY = {METHOD_VMAT, METHOD_VMAT_CV, METHOD_VMAT_TAME}


@dataclass(frozen=True)
class StrategyConfig:
    """Everything a single backtest run needs besides the data."""

    method: str = METHOD_VMAT
    d: int = 7  # maximum holding horizon, trading days
    p: int = 10  # AR lag order
    L: int = 60  # formation window length
    alpha: float = 0.999  # profit-probability participation level
    lam: float = 1.0
    lambda_mode: str = MODE_FIXED
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    cv_lookback: int = 10
    lb_lag: Optional[int] = None  # portmanteau lag count; default 2p
    lb_alpha: float = 0.05
    quantile_convention: str = CONVENTION_LITERAL
    init: Optional[str] = None  # default: coint for pairs, maxvar above
    n_steps: int = 1

    def __post_init__(self):
        if self.method not in ALL_METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {ALL_METHODS}")
        if self.d < 1 or self.p < 1:
            raise ValueError("d and p must be >= 1")
        if self.L < self.p + 10:
            raise ValueError(f"L must be >= p + 10, got L={self.L}, p={self.p}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.lam < 1.0:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if self.lambda_mode not in (MODE_FIXED, MODE_CV, MODE_TAME):
            raise ValueError(f"unknown lambda mode {self.lambda_mode!r}")
        if self.cv_lookback < 1 or self.n_steps < 1:
            raise ValueError("cv_lookback and n_steps must be >= 1")
        if not 0.0 < self.lb_alpha < 1.0:
            raise ValueError("lb_alpha must be in (0, 1)")
        if self.init is not None and self.init not in (INIT_COINT, INIT_MAXVAR):
            raise ValueError(f"unknown init {self.init!r}")
        LambdaGrid(self.lambda_grid)  # validates ascending / >= 1

    def effective_lambda_mode(self) -> str:
        if self.method == METHOD_VMAT_CV:
            return MODE_CV
        if self.method == METHOD_VMAT_TAME:
            return MODE_TAME
        return self.lambda_mode

    def init_for(self, n_assets: int) -> str:
        if self.init is not None:
            return self.init
        return INIT_COINT if n_assets == 2 else INIT_MAXVAR

    def effective_lb_lag(self) -> int:
        return self.lb_lag if self.lb_lag is not None else 2 * self.p


@dataclass
class TradeDecision:
    """Outcome of one evaluation day."""

    time_index: int
    weights: Optional[PortfolioWeights]
    y_now: float
    thresholds: Optional[ThresholdPair]
    delta: int
    bail_offset: Optional[int]  # first k in 1..d with a profit, if any
    exited_early: bool
    pl: float
    lam: Optional[float] = None
    diagnostic: str = ""


@dataclass
class BacktestReport:
    pl_mean: float
    pl_se: float
    signal_rate: float
    control_rate: float
    profit_rate: float
    max_drawdown: float
    decisions: list[TradeDecision]
    cumulative_pl: np.ndarray


def _resolve_lambda(panel: PricePanel, t: int, cfg: StrategyConfig, window: np.ndarray) -> tuple[float, Optional[SelectionOutcome]]:
    mode = cfg.effective_lambda_mode()
    if mode == MODE_FIXED:
        return cfg.lam, None
    grid = LambdaGrid(cfg.lambda_grid)
    if mode == MODE_CV:
        outcome = select_cv(panel, t, grid, cfg.cv_lookback, cfg)
    else:
        init = cfg.init_for(window.shape[1])
        outcome = select_tame(
            lambda lam: TradeoffObjective(lam, window, cfg.p),
            grid,
            lb_lag=cfg.effective_lb_lag(),
            significance=cfg.lb_alpha,
            init=init,
            n_steps=cfg.n_steps,
        )
    return outcome.chosen_lambda, outcome


def _build_weights(panel: PricePanel, t: int, cfg: StrategyConfig, window: np.ndarray) -> tuple[PortfolioWeights, Optional[float]]:
    if cfg.method in (METHOD_COINT, METHOD_COINT_AR):
        return coint_weights(window), None
    if cfg.method == METHOD_MAXVAR_AR:
        return maxvar_weights(window), None
    lam, _ = _resolve_lambda(panel, t, cfg, window)
    obj = TradeoffObjective(lam, window, cfg.p)
    return vmat_descent(obj, init=cfg.init_for(window.shape[1]), n_steps=cfg.n_steps), lam


def _build_thresholds(cfg: StrategyConfig, y_window: np.ndarray) -> ThresholdPair:
    if cfg.method == METHOD_COINT:
        return stationary_thresholds(y_window, cfg.alpha, cfg.d, cfg.quantile_convention)
    model = fit_ar(y_window, cfg.p)
    path = forecast(model, y_window[-cfg.p :], cfg.d)
    return ar_thresholds(path, cfg.alpha)


def run_trade(panel: PricePanel, t: int, cfg: StrategyConfig) -> TradeDecision:
    """Full strategy decision entered at evaluation time ``t``.

    Uses only rows up to t for the decision and rows t+1..t+d to settle it,
    so truncating the panel just after t + d cannot change the outcome.
    """
    if t < cfg.L + cfg.p:
        raise ValueError(f"t={t} leaves no room for a {cfg.L}-day window plus {cfg.p} lags")
    if t + cfg.d >= panel.n_rows:
        raise ValueError(f"t={t} needs {cfg.d} settlement rows, panel has {panel.n_rows}")

    log_prices = panel.log_prices()
    window = log_prices[t - cfg.L : t + 1]

    lam_used: Optional[float] = None
    try:
        built, lam_used = _build_weights(panel, t, cfg, window)
        w = built.as_unit_l1()
        weights = PortfolioWeights(w, UNIT_L1, built.provenance)
        y_window = window @ w
        y_now = float(y_window[-1])
        thresholds = _build_thresholds(cfg, y_window)
        delta = make_signal(y_now, thresholds).delta
    except TradeDegeneracy as exc:
        return TradeDecision(
            t, None, math.nan, None, 0, None, False, 0.0, lam_used,
            diagnostic=f"{type(exc).__name__}: {exc}",
        )

    if delta == 0:
        return TradeDecision(t, weights, y_now, thresholds, 0, None, False, 0.0, lam_used)

    future = log_prices[t + 1 : t + cfg.d + 1] @ w
    bail_offset: Optional[int] = None
    for k in range(1, cfg.d + 1):
        if delta * (float(future[k - 1]) - y_now) > 0.0:
            bail_offset = k
            break
    exit_k = bail_offset if bail_offset is not None else cfg.d
    pl = delta * (float(future[exit_k - 1]) - y_now)
    return TradeDecision(
        t, weights, y_now, thresholds, delta, bail_offset,
        exited_early=bail_offset is not None, pl=pl, lam=lam_used,
    )


def _run_block(panel: PricePanel, cfg: StrategyConfig, indices: Sequence[int]) -> list[TradeDecision]:
    return [run_trade(panel, t, cfg) for t in indices]


def default_eval_range(panel: PricePanel, cfg: StrategyConfig) -> range:
    """Every index with a full formation window and observable horizon."""
    return range(cfg.L + cfg.p, panel.n_rows - cfg.d)


def run_backtest(
    panel: PricePanel,
    cfg: StrategyConfig,
    eval_range: Optional[Iterable[int]] = None,
    workers: int = 1,
) -> BacktestReport:
    """One decision per index in ``eval_range`` plus the aggregate metrics.

    * signal rate -- share of days with a position
    * control rate -- share of positions that reached a profit within d days
    * profit rate -- share of all days with positive profit (days without a
      position count as non-profit)
    * max drawdown -- worst single-day realized loss (0 if never negative)
    """
    indices = sorted(default_eval_range(panel, cfg) if eval_range is None else eval_range)
    if not indices:
        raise ValueError("empty evaluation range")

    if workers > 1 and len(indices) > 1:
        blocks = np.array_split(np.asarray(indices), workers)
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = [pool.submit(_run_block, panel, cfg, list(block)) for block in blocks if block.size]
            decisions = [dec for fut in futures for dec in fut.result()]
    else:
        decisions = _run_block(panel, cfg, indices)

    pls = np.array([d.pl for d in decisions])
    n_days = len(decisions)
    participating = [d for d in decisions if d.delta != 0]
    controlled = [d for d in participating if d.bail_offset is not None]
    return BacktestReport(
        pl_mean=float(pls.mean()),
        pl_se=float(pls.std(ddof=1) / math.sqrt(n_days)) if n_days > 1 else 0.0,
        signal_rate=len(participating) / n_days,
        control_rate=len(controlled) / len(participating) if participating else 0.0,
        profit_rate=int(np.sum(pls > 0.0)) / n_days,
        max_drawdown=min([0.0] + [d.pl for d in participating]),
        decisions=decisions,
        cumulative_pl=np.cumsum(pls),
    )


def _sig(x: float, digits: int) -> str:
    if x == 0:
        return "0"
    return f"%.{digits}g" % x


def metric_table(reports: Sequence[tuple[str, BacktestReport]]) -> str:
    """Comparison table, all values in percent of log return."""
    if not reports:
        raise ValueError("no reports to tabulate")
    lines = [f"{'':<12}{'PL mean (se)':<22}{'SR':>7}{'CR':>7}{'PR':>7}{'maxDraw':>9}"]
    for name, rep in reports:
        pl = f"{_sig(rep.pl_mean * 100.0, 4)} ({_sig(rep.pl_se * 100.0, 4)})"
        lines.append(
            f"{name:<12}{pl:<22}"
            f"{_sig(rep.signal_rate * 100.0, 3):>7}"
            f"{_sig(rep.control_rate * 100.0, 3):>7}"
            f"{_sig(rep.profit_rate * 100.0, 3):>7}"
            f"{_sig(rep.max_drawdown * 100.0, 2):>9}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Delimited output.  Numbers use repr() so files reload to identical floats.

DECISION_FIELDS = ("t", "delta", "l", "pl", "y", "long_threshold", "short_threshold", "lambda", "diagnostic")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_decisions_csv(path, decisions: Sequence[TradeDecision]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DECISION_FIELDS)
        for d in decisions:
            writer.writerow([
                d.time_index,
                d.delta,
                _fmt(d.bail_offset),
                _fmt(d.pl),
                _fmt(d.y_now),
                _fmt(d.thresholds.long_threshold if d.thresholds else None),
                _fmt(d.thresholds.short_threshold if d.thresholds else None),
                _fmt(d.lam),
                d.diagnostic,
            ])


def read_decisions_csv(path) -> list[dict]:
    """Parse the decisions CSV back into plain dicts (schema above)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append({
                "t": int(row["t"]),
                "delta": int(row["delta"]),
                "l": int(row["l"]) if row["l"] else None,
                "pl": float(row["pl"]) if row["pl"] else 0.0,
                "y": float(row["y"]) if row["y"] else None,
                "long_threshold": float(row["long_threshold"]) if row["long_threshold"] else None,
                "short_threshold": float(row["short_threshold"]) if row["short_threshold"] else None,
                "lambda": float(row["lambda"]) if row["lambda"] else None,
                "diagnostic": row["diagnostic"],
            })
    return out


def write_cumulative_csv(path, decisions: Sequence[TradeDecision], cumulative: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "pl", "cumulative_pl"))
        for d, c in zip(decisions, cumulative):
            writer.writerow([d.time_index, repr(float(d.pl)), repr(float(c))])


def read_cumulative_csv(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(int(r["t"]), float(r["pl"]), float(r["cumulative_pl"])) for r in reader]
