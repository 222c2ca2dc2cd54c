"""Loading, alignment and windowing of multivariate daily price panels.

Input format is a wide CSV with a header row ``date,TICKER1,...,TICKERk``
and ISO-8601 dates.  Dates are treated as opaque ordered labels; there is
no calendar arithmetic anywhere in the package.  Missing cells are handled
by row intersection: any date on which any ticker lacks a value is dropped
(interpolation would inject autocorrelation into downstream model fits).
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import MarketDataError, NonPositivePrice

PathLike = Union[str, Path]


@dataclass(eq=False)
class PricePanel:
    """Aligned multivariate price history: T dates x k assets.

    Immutable after construction; safe to share across backtest workers.
    """

    timestamps: tuple[str, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray  # (T, k), strictly positive adjusted closes

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.timestamps = tuple(self.timestamps)
        self.tickers = tuple(str(t) for t in self.tickers)
        if self.prices.ndim != 2:
            raise MarketDataError("prices must be a 2-d matrix")
        if self.prices.shape != (len(self.timestamps), len(self.tickers)):
            raise MarketDataError(
                f"shape mismatch: {self.prices.shape} vs "
                f"{len(self.timestamps)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(self.prices)):
            raise MarketDataError("non-finite price cell")
        if np.any(self.prices <= 0.0):
            raise NonPositivePrice("prices must be strictly positive")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if not a < b:
                raise MarketDataError(f"timestamps not strictly increasing at {a!r} -> {b!r}")

    @property
    def n_rows(self) -> int:
        return self.prices.shape[0]

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    def log_prices(self) -> np.ndarray:
        """Natural log of the price matrix, same shape."""
        return np.log(self.prices)

    def truncated(self, n_rows: int) -> "PricePanel":
        """First ``n_rows`` rows as a new panel (used for causality audits)."""
        return PricePanel(self.timestamps[:n_rows], self.tickers, self.prices[:n_rows].copy())

    def to_csv(self, path: PathLike) -> None:
        """Write the wide CSV format; floats keep full round-trip precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("date",) + self.tickers)
            for ts, row in zip(self.timestamps, self.prices):
                writer.writerow([ts] + [repr(float(v)) for v in row])


@dataclass
class FormationWindow:
    """A trailing window of ``length`` trading days ending at ``end_index``.

    The window spans ``length + 1`` rows: ``end_index - length .. end_index``.
    """

    panel: PricePanel
    end_index: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("window length must be >= 1")
        if self.end_index - self.length < 0:
            raise ValueError(
                f"window out of range: end_index={self.end_index}, length={self.length}"
            )
        if self.end_index >= self.panel.n_rows:
            raise ValueError(f"end_index {self.end_index} beyond panel ({self.panel.n_rows} rows)")


def log_window(window: FormationWindow) -> np.ndarray:
    """Log prices over a formation window, shape (length + 1, k)."""
    lo = window.end_index - window.length
    return np.log(window.panel.prices[lo : window.end_index + 1])


def _parse_date(text: str) -> str:
    text = text.strip()
    try:
        _dt.date.fromisoformat(text)
    except ValueError as exc:
        raise MarketDataError(f"unparseable date {text!r} (expected ISO-8601)") from exc
    return text


def _read_one(path: PathLike, date_column: str) -> tuple[list[str], dict[str, list[float]]]:
    """One wide CSV -> (tickers, {date: row of values or nan for blanks})."""
    path = Path(path)
    if not path.exists():
        raise MarketDataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MarketDataError(f"empty file: {path}") from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise MarketDataError(f"{path}: need a date column plus at least one ticker")
        if header[0] != date_column:
            raise MarketDataError(
                f"{path}: first column is {header[0]!r}, expected {date_column!r}"
            )
        tickers = header[1:]
        rows: dict[str, list[float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MarketDataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            date = _parse_date(row[0])
            if date in rows:
                raise MarketDataError(f"{path}:{lineno}: duplicate date {date}")
            values = []
            for cell in row[1:]:
                cell = cell.strip()
                if not cell:
                    values.append(np.nan)
                    continue
                try:
                    values.append(float(cell))
                except ValueError as exc:
                    raise MarketDataError(f"{path}:{lineno}: bad number {cell!r}") from exc
            rows[date] = values
    return tickers, rows


def load_csv(
    paths: Union[PathLike, Sequence[PathLike]],
    date_column: str = "date",
    tickers: Sequence[str] | None = None,
) -> PricePanel:
    """Load one or more wide CSVs into an aligned :class:`PricePanel`.

    Rows are restricted to dates on which every kept ticker has a value;
    ticker order follows the headers (files in the order given), or the
    ``tickers`` selection when one is passed.  Completeness is judged on
    the kept columns only, so a gap in a dropped column costs no rows.

    Raises :class:`MarketDataError` for unparseable input, fewer than two
    kept tickers, or zero overlapping dates, and
    :class:`NonPositivePrice` for a non-positive price cell.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if not paths:
        raise MarketDataError("no input files")

    all_tickers: list[str] = []
    columns: dict[str, int] = {}
    tables: list[dict[str, list[float]]] = []
    present: set[str] | None = None
    for p in paths:
        file_tickers, rows = _read_one(p, date_column)
        for name in file_tickers:
            if name in columns:
                raise MarketDataError(f"duplicate ticker {name!r} across inputs")
            columns[name] = len(all_tickers)
            all_tickers.append(name)
        tables.append(rows)
        present = set(rows) if present is None else (present & set(rows))

    if tickers is None:
        kept = list(all_tickers)
    else:
        kept = [str(t) for t in tickers]
        missing = [t for t in kept if t not in columns]
        if missing:
            raise MarketDataError(f"requested tickers not in input: {missing}")
    if len(kept) < 2:
        raise MarketDataError(f"need at least 2 tickers, got {len(kept)}")

    def value_at(date: str, global_col: int) -> float:
        for rows in tables:
            width = len(next(iter(rows.values())))
            if global_col < width:
                return rows[date][global_col]
            global_col -= width
        raise IndexError(global_col)

    kept_cols = [columns[t] for t in kept]
    dates = sorted(
        d for d in (present or set())
        if not any(np.isnan(value_at(d, c)) for c in kept_cols)
    )
    if not dates:
        raise MarketDataError("zero overlapping dates across tickers/files")

    matrix = np.empty((len(dates), len(kept)), dtype=float)
    for i, d in enumerate(dates):
        for j, c in enumerate(kept_cols):
            matrix[i, j] = value_at(d, c)
    return PricePanel(tuple(dates), tuple(kept), matrix)
