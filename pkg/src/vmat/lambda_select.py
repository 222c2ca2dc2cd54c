"""Per-trading-time selection of the volatility weight lambda.

Two selectors:

* ``select_cv`` -- replay the full strategy at the most recent trading
  times whose holding window already closed, once per candidate lambda,
  and keep the candidate with the highest average realized profit.
* ``select_tame`` -- walk the grid from the largest lambda downward and
  keep the first candidate whose AR residuals look white under a
  portmanteau test; closest-to-pure-predictability fallback (the smallest
  value) when nothing passes.  Usually much cheaper than CV because it
  stops at the first acceptance and never replays trades.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .ar_forecast import fit_ar
from .errors import InsufficientHistory, TradeDegeneracy
from .stats_core import ljung_box
from .weight_solver import INIT_COINT, TradeoffObjective, vmat_descent

DEFAULT_LAMBDA_GRID = (1.0, 3.0, 5.0, 7.0, 10.0, 13.0, 20.0, 30.0)

MODE_FIXED = "fixed"
MODE_CV = "cv"
MODE_TAME = "tame"


@dataclass(frozen=True)
class LambdaGrid:
    """Ascending candidate values, all >= 1."""

    values: tuple[float, ...] = DEFAULT_LAMBDA_GRID

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("lambda grid must be nonempty")
        if vals[0] < 1.0:
            raise ValueError(f"lambda must be >= 1, got {vals[0]}")
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise ValueError("lambda grid must be strictly ascending")
        object.__setattr__(self, "values", vals)

    @property
    def smallest(self) -> float:
        return self.values[0]

    @property
    def largest(self) -> float:
        return self.values[-1]


@dataclass
class SelectionOutcome:
    chosen_lambda: float
    method: str  # "cv" | "tame" | "fixed"
    diagnostics: dict[float, Union[float, str]] = field(default_factory=dict)
    none_adequate: bool = False  # tame only: no candidate passed the whiteness test


def select_cv(panel, t: int, grid: LambdaGrid, lookback: int, cfg) -> SelectionOutcome:
    """Cross-validated lambda at trading time ``t``.

    Candidates are scored by the mean realized profit of full fixed-lambda
    trades entered at the ``lookback`` most recent times whose d-day
    horizon completes strictly before ``t``; the outcome therefore depends
    only on data before ``t``.  A no-signal day scores zero.  Ties go to
    the smallest lambda.
    """
    from .backtester import run_trade  # deferred: backtester imports this module

    if lookback < 1:
        raise ValueError("lookback must be >= 1")
    first_entry = t - cfg.d - lookback
    if first_entry < cfg.L + cfg.p:
        raise InsufficientHistory(
            f"cv at t={t} needs {lookback} closed trades after warmup "
            f"(first entry {first_entry} < {cfg.L + cfg.p})"
        )
    entries = range(first_entry, t - cfg.d)

    diagnostics: dict[float, Union[float, str]] = {}
    best_lam = grid.smallest
    best_pl = -np.inf
    for lam in grid.values:
        candidate = replace(cfg, method="vmat", lambda_mode=MODE_FIXED, lam=lam)
        mean_pl = float(np.mean([run_trade(panel, s, candidate).pl for s in entries]))
        diagnostics[lam] = mean_pl
        if mean_pl > best_pl:
            best_pl = mean_pl
            best_lam = lam
    return SelectionOutcome(best_lam, MODE_CV, diagnostics)


def select_tame(
    make_objective: Callable[[float], TradeoffObjective],
    grid: LambdaGrid,
    lb_lag: int,
    significance: float = 0.05,
    init: str = INIT_COINT,
    n_steps: int = 1,
) -> SelectionOutcome:
    """Backward goodness-of-fit selection of lambda.

    Walks the grid from largest to smallest; for each candidate runs the
    weight optimization, refits the AR model on the resulting series and
    applies the portmanteau whiteness test to its residuals.  Returns the
    first candidate whose p-value exceeds ``significance``.  Candidates
    that degenerate are skipped with a note.  When nothing passes, the
    smallest value is returned with ``none_adequate`` set.
    """
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must be in (0, 1)")
    diagnostics: dict[float, Union[float, str]] = {}
    for lam in reversed(grid.values):
        try:
            obj = make_objective(lam)
            weights = vmat_descent(obj, init=init, n_steps=n_steps)
            series = obj.log_window @ weights.as_unit_l1()
            model = fit_ar(series, obj.order)
            _, p_value = ljung_box(model.residuals, lb_lag, model.order)
        except TradeDegeneracy as exc:
            diagnostics[lam] = f"degenerate: {exc}"
            continue
        diagnostics[lam] = p_value
        if p_value > significance:
            return SelectionOutcome(lam, MODE_TAME, diagnostics)
    return SelectionOutcome(grid.smallest, MODE_TAME, diagnostics, none_adequate=True)
