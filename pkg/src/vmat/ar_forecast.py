"""AR(p) fitting and multi-step forecasting for univariate portfolio series.

Models are fitted without an intercept on the mean-centered series: the
centering absorbs the level, so the predictability objective downstream and
the forecasts here share one convention.  No stationarity restriction is
imposed on the fitted coefficients; explosive fits are allowed and surface
later as oversized forecast errors (or a non-finite path at long horizons),
never as a fitting error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData
from .stats_core import ols

MIN_EXTRA_OBS = 5  # fit requires n >= order + MIN_EXTRA_OBS


@dataclass
class ArModel:
    """Fitted AR(p): lag coefficients, centering mean, innovation variance."""

    order: int
    beta: np.ndarray  # beta[0] multiplies lag 1, ..., beta[p-1] lag p
    series_mean: float
    residual_variance: float
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def psi_weights(self, count: int) -> np.ndarray:
        """First ``count`` moving-average weights of the fitted recursion.

        psi[0] = 1 and psi[j] = sum_{i=1..min(j,p)} beta[i-1] * psi[j-i];
        these scale the innovation variance into multi-step forecast error.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        psi = np.zeros(count)
        psi[0] = 1.0
        for j in range(1, count):
            upto = min(j, self.order)
            psi[j] = float(self.beta[:upto] @ psi[j - upto : j][::-1])
        return psi


@dataclass
class ForecastPath:
    """Point forecasts 1..d steps ahead with forecast-error standard deviations."""

    horizon: int
    point: np.ndarray
    err_std: np.ndarray


def fit_ar(series: np.ndarray, order: int) -> ArModel:
    """Fit AR(p) by least squares on the mean-centered series.

    Regresses centered y_t on centered (y_{t-1}, ..., y_{t-p}) over the
    n - p rows with full lag history, no intercept.  Raises
    :class:`InsufficientData` when n < p + 5 and :class:`RankDeficient`
    for an unfittable (e.g. constant) series.
    """
    y = np.asarray(series, dtype=float).ravel()
    p = int(order)
    if p < 1:
        raise ValueError(f"order must be >= 1, got {p}")
    n = y.size
    if n < p + MIN_EXTRA_OBS:
        raise InsufficientData(f"need at least {p + MIN_EXTRA_OBS} observations for AR({p}), got {n}")
    mean = float(y.mean())
    c = y - mean
    design = np.column_stack([c[p - j : n - j] for j in range(1, p + 1)])
    fit = ols(design, c[p:])
    return ArModel(p, fit.coefficients, mean, fit.residual_variance, fit.residuals)


def forecast(model: ArModel, recent: np.ndarray, horizon: int) -> ForecastPath:
    """Iterate the fitted recursion ``horizon`` steps ahead.

    ``recent`` holds the last p observations in chronological order
    (recent[-1] is the newest).  err_std[i-1] is the usual truncated
    moving-average formula sqrt(sigma^2 * sum_{j<i} psi_j^2) and is
    nondecreasing in the horizon.  Explosive models may overflow to
    non-finite values; callers decide whether that voids the signal.
    """
    d = int(horizon)
    if d < 1:
        raise ValueError(f"horizon must be >= 1, got {d}")
    r = np.asarray(recent, dtype=float).ravel()
    if r.size != model.order:
        raise ValueError(f"recent must hold the last {model.order} observations, got {r.size}")

    with np.errstate(over="ignore", invalid="ignore"):
        state = list(r - model.series_mean)  # centered, oldest first
        point = np.empty(d)
        for i in range(d):
            nxt = float(model.beta @ np.asarray(state[::-1][: model.order]))
            state.append(nxt)
            state.pop(0)
            point[i] = nxt + model.series_mean
        psi = model.psi_weights(d)
        err_std = np.sqrt(model.residual_variance * np.cumsum(psi**2))
    return ForecastPath(d, point, err_std)


def forecast_from_series(model: ArModel, series: np.ndarray, horizon: int) -> ForecastPath:
    """Convenience wrapper: forecast from the tail of a full series."""
    y = np.asarray(series, dtype=float).ravel()
    if y.size < model.order:
        raise InsufficientData(f"series shorter than model order {model.order}")
    return forecast(model, y[-model.order :], horizon)
