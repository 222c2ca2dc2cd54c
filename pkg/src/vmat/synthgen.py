"""Synthetic multivariate price panels with known ground truth.

Every other module's statistical tests lean on these constructions: the
generating hedge direction, spread dynamics and volatility structure are
known exactly, so recovered weights, forecasts and profits can be checked
against the construction instead of against the code under test.

Log prices are built as

    x_j = level + shared random-walk trend + idiosyncratic walk   (j >= 2)
    x_1 = level + sum_j gamma_j * (x_j - level) + AR(1) spread

with the hedge vector scaled so its first component is 1, i.e.
(1, -gamma_2, ..., -gamma_k).  Combining the panel with the hedge vector
therefore yields exactly the stationary AR(1) spread.  Optional extra
factors add independent high-volatility nonstationary components along
loadings orthogonal to the hedge direction, leaving the spread untouched:

* ``momentum`` -- increments follow an AR(1) (trending, forecastable),
* ``regime``   -- increments carry a slow square-wave drift (long swings a
  short-lag fit cannot whiten),
* ``seasonal`` -- increments cycle with a fixed period,
* ``smoothed`` -- the level itself is two-point-averaged noise plus a faint
  walk; its unit-root moving-average structure cannot be whitened by any
  finite autoregression, and most of its variance is unforecastable.
* ``echo``     -- the level echoes itself ``period`` steps back
  (y_t = momentum * y_{t-period} + shock).  A fit with fewer lags than the
  period sees almost no structure: explained variance near zero, residuals
  carrying the full lag-``period`` autocorrelation.  The designed worst
  case for a short-lag model and the cleanest high-volume/low-fit probe.

Randomness comes from numpy's ``default_rng`` (PCG64, 64-bit, seeded), and
draws happen in a fixed order (trend, per-asset walks, spread, factors),
so a spec plus seed reproduces the panel bit for bit.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .market_data import PricePanel

FACTOR_MOMENTUM = "momentum"
FACTOR_REGIME = "regime"
FACTOR_SEASONAL = "seasonal"
FACTOR_SMOOTHED = "smoothed"
FACTOR_ECHO = "echo"


@dataclass(frozen=True)
class ExtraFactor:
    """An independent nonstationary component added along ``loading``."""

    sigma: float
    kind: str = FACTOR_MOMENTUM
    momentum: float = 0.9  # AR(1) coefficient on increments (momentum kind)
    period: int = 40  # cycle length (regime / seasonal kinds)
    level_noise: float = 0.0  # iid noise added to the factor level
    loading: Optional[tuple[float, ...]] = None  # default: unit vector orthogonal to hedge

    def __post_init__(self):
        if self.sigma < 0 or self.level_noise < 0:
            raise ValueError("factor scales must be >= 0")
        if self.kind not in (FACTOR_MOMENTUM, FACTOR_REGIME, FACTOR_SEASONAL,
                             FACTOR_SMOOTHED, FACTOR_ECHO):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if not abs(self.momentum) < 1:
            raise ValueError("momentum must satisfy |momentum| < 1")
        if self.period < 2:
            raise ValueError("period must be >= 2")


@dataclass(frozen=True)
class SynthSpec:
    k: int = 2
    rows: int = 1500
    hedge_vector: tuple[float, ...] = (1.0, -1.0)
    phi: float = 0.9  # AR(1) coefficient of the spread
    sigma_spread: float = 0.01
    sigma_trend: float = 0.02
    extra_factors: tuple[ExtraFactor, ...] = ()
    seed: int = 42
    base_price: float = 100.0
    start_date: str = "2016-01-04"

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least 2 assets")
        if self.rows < 2:
            raise ValueError("need at least 2 rows")
        if len(self.hedge_vector) != self.k:
            raise ValueError(f"hedge vector must have length k={self.k}")
        if not any(v != 0.0 for v in self.hedge_vector):
            raise ValueError("hedge vector must be nonzero")
        if self.hedge_vector[0] == 0.0:
            raise ValueError("hedge vector needs a nonzero first component")
        if not abs(self.phi) < 1:
            raise ValueError("spread AR(1) requires |phi| < 1")
        if self.sigma_spread < 0 or self.sigma_trend < 0:
            raise ValueError("sigma values must be >= 0")

    def normalized_hedge(self) -> np.ndarray:
        """Ground-truth hedge direction, unit L2."""
        h = np.asarray(self.hedge_vector, dtype=float)
        return h / np.linalg.norm(h)

    def default_factor_loading(self) -> np.ndarray:
        """A unit vector orthogonal to the hedge direction."""
        h = self.normalized_hedge()
        v = np.ones(self.k) - (np.ones(self.k) @ h) * h
        if np.linalg.norm(v) < 1e-8:  # hedge is along the ones vector
            v = np.zeros(self.k)
            v[0] = 1.0
            v -= (v @ h) * h
        return v / np.linalg.norm(v)


def _factor_series(factor: ExtraFactor, rows: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(rows, dtype=float)
    if factor.kind == FACTOR_MOMENTUM:
        shocks = rng.normal(0.0, factor.sigma, rows)
        increments = np.empty(rows)
        prev = 0.0
        for i in range(rows):
            prev = factor.momentum * prev + shocks[i]
            increments[i] = prev
    elif factor.kind == FACTOR_REGIME:
        drift = np.where(np.sin(2.0 * np.pi * t / factor.period) >= 0.0, 1.0, -1.0)
        increments = factor.sigma * drift + 0.2 * factor.sigma * rng.normal(0.0, 1.0, rows)
    elif factor.kind == FACTOR_SEASONAL:
        increments = factor.sigma * np.cos(2.0 * np.pi * t / factor.period)
        increments += 0.2 * factor.sigma * rng.normal(0.0, 1.0, rows)
    elif factor.kind == FACTOR_SMOOTHED:
        shocks = rng.normal(0.0, factor.sigma, rows + 1)
        smoothed = (shocks[1:] + shocks[:-1]) / math.sqrt(2.0)
        level = smoothed + np.cumsum(rng.normal(0.0, 0.02 * factor.sigma, rows))
        increments = None
    else:  # echo
        shocks = rng.normal(0.0, factor.sigma, rows)
        level = np.empty(rows)
        for i in range(rows):
            back = level[i - factor.period] if i >= factor.period else 0.0
            level[i] = factor.momentum * back + shocks[i]
        increments = None
    if increments is not None:
        level = np.cumsum(increments)
    if factor.level_noise > 0.0:
        level = level + rng.normal(0.0, factor.level_noise, rows)
    return level


def generate(spec: SynthSpec) -> PricePanel:
    """Materialize the panel described by ``spec``; deterministic given the seed."""
    rng = np.random.default_rng(spec.seed)
    rows, k = spec.rows, spec.k
    base = math.log(spec.base_price)

    trend = np.cumsum(rng.normal(0.0, spec.sigma_trend, rows))
    log_x = np.empty((rows, k))
    for j in range(1, k):
        idio = np.cumsum(rng.normal(0.0, spec.sigma_trend, rows))
        log_x[:, j] = base + trend + idio

    if spec.sigma_spread > 0.0:
        shocks = rng.normal(0.0, spec.sigma_spread, rows)
        spread = np.empty(rows)
        spread[0] = shocks[0] / math.sqrt(1.0 - spec.phi**2)  # stationary start
        for i in range(1, rows):
            spread[i] = spec.phi * spread[i - 1] + shocks[i]
    else:
        spread = np.zeros(rows)

    h = np.asarray(spec.hedge_vector, dtype=float) / spec.hedge_vector[0]
    gamma = -h[1:]  # x_1 = base + sum_j gamma_j (x_j - base) + spread
    log_x[:, 0] = base + (log_x[:, 1:] - base) @ gamma + spread

    for factor in spec.extra_factors:
        loading = (
            np.asarray(factor.loading, dtype=float)
            if factor.loading is not None
            else spec.default_factor_loading()
        )
        if loading.shape != (k,):
            raise ValueError(f"factor loading must have length k={k}")
        log_x += np.outer(_factor_series(factor, rows, rng), loading)

    start = _dt.date.fromisoformat(spec.start_date)
    timestamps = tuple((start + _dt.timedelta(days=i)).isoformat() for i in range(rows))
    return PricePanel(timestamps, tuple(f"A{j + 1}" for j in range(k)), np.exp(log_x))
