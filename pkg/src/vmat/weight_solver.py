"""Portfolio weight construction.

Three routes produce a weight vector from a formation window of log prices:

* ``coint_weights`` -- hedge regression of asset 1 on the others (the
  classical two-step pair construction, generalized to k > 2 by multiple
  regression), giving the direction along which the combined series is
  closest to stationary.
* ``maxvar_weights`` -- top eigenvector of the centered scatter matrix,
  the direction of maximum in-window variance.
* ``vmat_descent`` -- alternating maximization of

      -sum_t (AR residual of w'x_t)^2  +  lam * sum_t (w'x_t - w'xbar)^2

  over the unit sphere: for fixed AR coefficients the objective is a
  quadratic form w'Kw whose maximizer is the top eigenvector of K; for
  fixed w the optimal coefficients are the least-squares AR fit on the
  combined series.  Both half-steps are exact maximizations, so the
  objective trace is nondecreasing by construction.

Both sums run over the rows that have a full lag history (the last
L+1-p rows of the window) so the two quadratic forms share a row set and
the eigenvector identity is exact; the volatility mean is taken over that
same row set.  The AR residual rows are built from mean-centered log
prices, matching the no-intercept centered fit used for the coefficients.

During optimization weights live on the unit L2 sphere; the returned
trading vector is rescaled to unit L1 (gross exposure one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ar_forecast import MIN_EXTRA_OBS, fit_ar
from .errors import DegenerateDirection, InsufficientData, RankDeficient
from .stats_core import apply_sign_convention, ols, top_eigenpair

UNIT_L2 = "unit_l2"
UNIT_L1 = "unit_l1"

INIT_COINT = "coint"
INIT_MAXVAR = "maxvar"


@dataclass
class Provenance:
    """How a weight vector was produced."""

    init_method: str
    lam: float
    steps_run: int
    objective_trace: list[float] = field(default_factory=list)
    w_history: list[np.ndarray] = field(default_factory=list)  # unit-L2 w after each step


@dataclass
class PortfolioWeights:
    w: np.ndarray
    norm_state: str
    provenance: Optional[Provenance] = None

    def as_unit_l1(self) -> np.ndarray:
        """The trading-scale vector (gross exposure one)."""
        if self.norm_state == UNIT_L1:
            return self.w
        total = float(np.sum(np.abs(self.w)))
        if total == 0.0:
            raise DegenerateDirection("zero weight vector")
        return self.w / total


class TradeoffObjective:
    """Precomputed pieces of the predictability/volatility trade-off.

    Parameters: ``lam >= 1`` (relative weight on volatility), the
    ``(L+1, k)`` log-price window, and the AR lag order ``p``.  The window
    must leave at least p + 5 rows with full lag history.
    """

    def __init__(self, lam: float, log_window: np.ndarray, order: int):
        if lam < 1.0:
            raise ValueError(f"lambda must be >= 1, got {lam}")
        W = np.asarray(log_window, dtype=float)
        if W.ndim != 2:
            raise ValueError("log_window must be 2-d")
        p = int(order)
        if p < 1:
            raise ValueError("order must be >= 1")
        rows = W.shape[0]
        if rows - p < p + MIN_EXTRA_OBS:
            raise InsufficientData(
                f"window of {rows} rows leaves {rows - p} usable AR rows; "
                f"need at least {p + MIN_EXTRA_OBS} for order {p}"
            )
        self.lam = float(lam)
        self.log_window = W
        self.order = p

        full_mean = W.mean(axis=0)
        centered = W - full_mean
        self._response = centered[p:]  # (R, k)
        self._lags = [centered[p - j : rows - j] for j in range(1, p + 1)]
        vol_rows = W[p:]
        self._vol = vol_rows - vol_rows.mean(axis=0)  # (R, k)
        self._scatter = self._vol.T @ self._vol

    @property
    def n_rows(self) -> int:
        return self.log_window.shape[0]

    @property
    def n_assets(self) -> int:
        return self.log_window.shape[1]

    def volatility_rows(self) -> np.ndarray:
        """The window rows entering both sums (those with full lag history)."""
        return self.log_window[self.order :]

    def residual_rows(self, beta: np.ndarray) -> np.ndarray:
        """Per-row AR residual vectors r_t: combining with w gives the
        residual of the centered AR fit on the series w'x."""
        beta = np.asarray(beta, dtype=float).ravel()
        if beta.size != self.order:
            raise ValueError(f"beta must have length {self.order}, got {beta.size}")
        r = self._response.copy()
        for j in range(self.order):
            r -= beta[j] * self._lags[j]
        return r


def objective_value(obj: TradeoffObjective, w: np.ndarray, beta: np.ndarray) -> float:
    """The trade-off objective at unit-L2 ``w`` and AR coefficients ``beta``."""
    w = np.asarray(w, dtype=float).ravel()
    if abs(np.linalg.norm(w) - 1.0) > 1e-6:
        raise ValueError("w must be unit L2")
    ar_part = obj.residual_rows(beta) @ w
    vol_part = obj._vol @ w
    return float(obj.lam * (vol_part @ vol_part) - (ar_part @ ar_part))


def k_matrix(obj: TradeoffObjective, beta: np.ndarray) -> np.ndarray:
    """Symmetric matrix K with w'Kw == objective_value(obj, w, beta)."""
    r = obj.residual_rows(beta)
    K = obj.lam * obj._scatter - r.T @ r
    return 0.5 * (K + K.T)


def maxvar_weights(log_window: np.ndarray) -> PortfolioWeights:
    """Unit-L2 direction of maximum variance over the window rows."""
    W = np.asarray(log_window, dtype=float)
    if W.ndim != 2 or W.shape[0] < 2:
        raise ValueError("need a 2-d window with at least 2 rows")
    centered = W - W.mean(axis=0)
    scatter = centered.T @ centered
    scale = float(np.max(np.abs(scatter)))
    if scale == 0.0 or not np.isfinite(scale):
        raise DegenerateDirection("window has zero scatter (all rows identical)")
    pair = top_eigenpair(scatter)
    return PortfolioWeights(pair.vector, UNIT_L2, Provenance(INIT_MAXVAR, math.inf, 0))


def coint_weights(log_window: np.ndarray) -> PortfolioWeights:
    """Hedge-regression weight vector, unit L2.

    Regresses the log price of asset 1 on assets 2..k plus an intercept and
    returns (1, -gamma_2, ..., -gamma_k) rescaled, under the deterministic
    sign convention.  Requires k >= 2 and at least k + 5 rows.
    """
    W = np.asarray(log_window, dtype=float)
    if W.ndim != 2 or W.shape[1] < 2:
        raise ValueError("need at least 2 assets")
    rows, k = W.shape
    if rows < k + MIN_EXTRA_OBS:
        raise InsufficientData(f"need at least {k + MIN_EXTRA_OBS} rows for {k} assets, got {rows}")
    design = np.column_stack([np.ones(rows), W[:, 1:]])
    fit = ols(design, W[:, 0])
    w = np.concatenate(([1.0], -fit.coefficients[1:]))
    w = apply_sign_convention(w / np.linalg.norm(w))
    return PortfolioWeights(w, UNIT_L2, Provenance(INIT_COINT, math.nan, 0))


def _init_vector(obj: TradeoffObjective, init: str) -> np.ndarray:
    if init == INIT_COINT:
        return coint_weights(obj.log_window).w
    if init == INIT_MAXVAR:
        return maxvar_weights(obj.log_window).w
    raise ValueError(f"unknown init method {init!r} (expected 'coint' or 'maxvar')")


def vmat_descent(obj: TradeoffObjective, init: str = INIT_COINT, n_steps: int = 1) -> PortfolioWeights:
    """Alternating maximization of the trade-off objective.

    Each step replaces w by the top eigenvector of K(beta), then refits the
    AR coefficients on the new combined series.  ``objective_trace`` holds
    the objective at the starting point and after every half-step;
    ``w_history`` the unit-L2 iterate after each full step.  The returned
    vector is rescaled to unit L1.  One step is the practical default: the
    iteration converges essentially immediately (exposed for trace studies).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    window = obj.log_window
    w = _init_vector(obj, init)

    def refit(weights: np.ndarray) -> np.ndarray:
        try:
            return fit_ar(window @ weights, obj.order).beta
        except RankDeficient as exc:
            raise DegenerateDirection(f"AR fit failed along current direction: {exc}") from exc

    beta = refit(w)
    prov = Provenance(init, obj.lam, n_steps, [objective_value(obj, w, beta)], [])
    for _ in range(n_steps):
        w = top_eigenpair(k_matrix(obj, beta)).vector
        prov.objective_trace.append(objective_value(obj, w, beta))
        beta = refit(w)
        prov.objective_trace.append(objective_value(obj, w, beta))
        prov.w_history.append(w.copy())

    return PortfolioWeights(w / np.sum(np.abs(w)), UNIT_L1, prov)


def direction_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in radians between the lines spanned by u and v (sign-blind)."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    denom = np.linalg.norm(u) * np.linalg.norm(v)
    if denom == 0.0:
        raise ValueError("zero vector has no direction")
    return float(np.arccos(np.clip(abs(float(u @ v)) / denom, -1.0, 1.0)))
