"""Participation signals: thresholds plus the three-way entry rule.

Two threshold constructions:

* ``ar_thresholds`` -- the short threshold is the level sigma solving

      prod_{i=1..d} Phi((sigma - yhat_{t+i}) / err_i) = alpha

  and the long threshold solves the same product = 1 - alpha.  The product
  is the joint probability (independent-increment approximation) that the
  next d values all stay below sigma, so entering short above it means the
  position closes profitably within the horizon with probability ~alpha.
  The product is monotone increasing in sigma; each root is found by
  bracketed bisection, which is guaranteed to converge even in the flat
  tails where a Newton step would stall.

* ``stationary_thresholds`` -- quantile of the normal approximation to the
  formation sample, the classical rule for a stationary combined series.
  The quantile level per side is (1 - alpha)^(1/d) / 2 by default (the
  ``literal`` convention); for alpha near 1 this lands *below* the median,
  collapsing the band and firing on almost every day.  The ``upper-tail``
  convention 1 - (1 - alpha^(1/d)) / 2 is available per configuration and
  produces a conventional wide band instead.  Reports carry the convention
  used.  The long threshold is the short one reflected about the sample
  mean (a literal sign flip presumes a zero-mean series).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ar_forecast import ForecastPath
from .errors import DegenerateSeries, InsufficientData, InvalidAlpha, NonFiniteForecast
from .stats_core import normal_cdf, normal_quantile

METHOD_AR_PRODUCT = "ar_product"
METHOD_STATIONARY_QUANTILE = "stationary_quantile"

CONVENTION_LITERAL = "literal"
CONVENTION_UPPER_TAIL = "upper-tail"

_BISECT_TOL = 1e-10
_BISECT_MAX_ITER = 200


@dataclass
class ThresholdPair:
    long_threshold: float
    short_threshold: float
    method: str
    alpha: float
    horizon: int


@dataclass
class Signal:
    delta: int  # +1 long, -1 short, 0 stay out
    y_now: float
    thresholds: ThresholdPair


def _interval_product(sigma: float, point: np.ndarray, err_std: np.ndarray) -> float:
    prod = 1.0
    for yhat, err in zip(point, err_std):
        prod *= normal_cdf((sigma - yhat) / err)
        if prod == 0.0:
            break
    return prod


def _solve_product(point: np.ndarray, err_std: np.ndarray, target: float) -> float:
    """Root of the monotone product equation by expanding-bracket bisection."""
    span = 10.0 * float(np.max(err_std))
    lo = float(np.min(point)) - span
    hi = float(np.max(point)) + span
    width = max(hi - lo, 1.0)
    grow = 1.0
    while _interval_product(lo, point, err_std) > target:
        lo -= grow * width
        grow *= 2.0
    grow = 1.0
    while _interval_product(hi, point, err_std) < target:
        hi += grow * width
        grow *= 2.0

    mid = 0.5 * (lo + hi)
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        value = _interval_product(mid, point, err_std)
        if abs(value - target) <= _BISECT_TOL:
            return mid
        if value < target:
            lo = mid
        else:
            hi = mid
    return mid


def ar_thresholds(path: ForecastPath, alpha: float) -> ThresholdPair:
    """Entry thresholds from a forecast path via the interval-product rule.

    Requires 0.5 < alpha < 1 (below one half the band inverts and the rule
    loses its meaning) and strictly positive forecast errors.  A forecast
    path that overflowed raises :class:`NonFiniteForecast`; callers treat
    that as a no-signal day.
    """
    if not 0.5 < alpha < 1.0:
        raise InvalidAlpha(f"interval-product rule requires 0.5 < alpha < 1, got {alpha}")
    point = np.asarray(path.point, dtype=float)
    err = np.asarray(path.err_std, dtype=float)
    if not (np.all(np.isfinite(point)) and np.all(np.isfinite(err))):
        raise NonFiniteForecast("forecast path overflowed")
    if np.any(err <= 0.0):
        raise DegenerateSeries("forecast error must be positive at every horizon")
    short = _solve_product(point, err, alpha)
    long_ = _solve_product(point, err, 1.0 - alpha)
    return ThresholdPair(long_, short, METHOD_AR_PRODUCT, alpha, path.horizon)


def quantile_level(alpha: float, horizon: int, convention: str = CONVENTION_LITERAL) -> float:
    """Per-side quantile level for the stationary-distribution rule."""
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must be in (0, 1), got {alpha}")
    if convention == CONVENTION_LITERAL:
        return (1.0 - alpha) ** (1.0 / horizon) / 2.0
    if convention == CONVENTION_UPPER_TAIL:
        return 1.0 - (1.0 - alpha ** (1.0 / horizon)) / 2.0
    raise ValueError(f"unknown quantile convention {convention!r}")


def stationary_thresholds(
    formation_series: np.ndarray,
    alpha: float,
    horizon: int,
    convention: str = CONVENTION_LITERAL,
) -> ThresholdPair:
    """Entry thresholds from the normal approximation to the formation sample."""
    y = np.asarray(formation_series, dtype=float).ravel()
    if y.size < 10:
        raise InsufficientData(f"need at least 10 formation observations, got {y.size}")
    mu = float(y.mean())
    var = float(y.var(ddof=1))
    if var <= 0.0:
        raise DegenerateSeries("formation series has zero variance")
    q = quantile_level(alpha, horizon, convention)
    if q == 0.5:
        short = mu
    else:
        short = normal_quantile(q, mu, var)
    long_ = 2.0 * mu - short
    return ThresholdPair(long_, short, METHOD_STATIONARY_QUANTILE, alpha, horizon)


def make_signal(y_now: float, thresholds: ThresholdPair) -> Signal:
    """Three-way entry rule: long below the long threshold, short above the
    short threshold (long takes precedence if the band is inverted), else out."""
    if not (np.isfinite(y_now) and np.isfinite(thresholds.long_threshold) and np.isfinite(thresholds.short_threshold)):
        raise NonFiniteForecast("signal inputs must be finite")
    if y_now < thresholds.long_threshold:
        delta = 1
    elif y_now > thresholds.short_threshold:
        delta = -1
    else:
        delta = 0
    return Signal(delta, float(y_now), thresholds)
