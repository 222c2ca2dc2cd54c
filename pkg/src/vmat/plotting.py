"""Figure rendering for the report paths.

Every CLI command that writes delimited output also drops a PNG next to it
(cumulative profit curves, sweep means with confidence bands, weight
trajectories).  Rendering is headless (Agg) and metadata-free so repeated
runs produce byte-identical files.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_FIGSIZE = (8.0, 4.5)
_DPI = 120
_PNG_META = {"Software": None}  # strip the version string for reproducible bytes


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)


def save_cumulative_figure(path, curves: Mapping[str, tuple[Sequence[int], Sequence[float]]]) -> None:
    """Cumulative profit per strategy over the evaluation period."""
    fig, ax = _new_axes("Cumulative profit", "evaluation day", "cumulative log return")
    for name, (days, cumulative) in curves.items():
        ax.plot(days, cumulative, label=name, linewidth=1.2)
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def save_sweep_figure(path, axis: str, values: Sequence[float],
                      means: Sequence[float], ci_low: Sequence[float],
                      ci_high: Sequence[float]) -> None:
    """Mean daily profit against a parameter value with its 95% band."""
    fig, ax = _new_axes(f"Profit sensitivity to {axis}", axis, "mean daily log return")
    ax.plot(values, means, marker="o", linewidth=1.2)
    ax.fill_between(values, ci_low, ci_high, alpha=0.25, linewidth=0)
    _save(fig, path)


def save_trace_figure(path, steps: Sequence[int], w1_by_init: Mapping[str, Sequence[float]]) -> None:
    """First weight component along optimizer iterations, one line per init."""
    fig, ax = _new_axes("Weight trajectory", "iteration", "first weight component")
    for init, w1 in w1_by_init.items():
        ax.plot(steps, w1, marker="o", label=f"init={init}", linewidth=1.2)
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)
