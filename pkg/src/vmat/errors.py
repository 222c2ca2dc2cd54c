"""Exception hierarchy shared across the package.

``TradeDegeneracy`` groups the conditions that invalidate a single trading
decision (a pathological formation window, an explosive forecast, ...) but
must never abort a whole backtest: the backtester catches it and records a
non-participation day instead.
"""


class VmatError(Exception):
    """Base class for all package errors."""


class MarketDataError(VmatError):
    """Unusable input data: parse failures, too few tickers, empty overlap."""


class NonPositivePrice(MarketDataError):
    """A price cell is zero or negative."""


class InsufficientData(VmatError):
    """Not enough observations for the requested fit or estimate."""


class TradeDegeneracy(VmatError):
    """A per-decision pathology; backtests map it to a no-signal day."""


class RankDeficient(TradeDegeneracy):
    """Regression design matrix is numerically rank deficient."""


class DegenerateSeries(TradeDegeneracy):
    """A series with no variation where variation is required."""


class DegenerateDirection(TradeDegeneracy):
    """Weight optimization collapsed (zero scatter, unfittable series)."""


class NonFiniteForecast(TradeDegeneracy):
    """Forecast path overflowed (explosive fitted model)."""


class InvalidAlpha(TradeDegeneracy):
    """Participation level outside the range where the rule is defined."""


class InsufficientHistory(TradeDegeneracy):
    """Not enough past trading times for cross-validated selection."""
