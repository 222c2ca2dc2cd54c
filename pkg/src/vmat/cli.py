"""Command-line entry point.

Subcommands:

* ``backtest`` -- one strategy on one data file, metrics plus per-decision
  and cumulative-profit CSVs and a cumulative-profit figure.
* ``compare``  -- all six strategies with shared parameters, one table.
* ``sweep``    -- rerun the trade-off strategy along one parameter axis
  (lambda, alpha, p or L) and report mean profit with 95% intervals.
* ``trace``    -- weight-vector trajectory across optimizer iterations
  from both initializations at a single trading time.
* ``synth``    -- write a synthetic panel in the standard CSV format.

Option precedence is CLI flag over config file (``--config``, JSON) over
built-in defaults.  All outputs are deterministic given (config, seed,
data) at any worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import plotting
from .backtester import (
    ALL_METHODS,
    DISPLAY_NAMES,
    StrategyConfig,
    default_eval_range,
    metric_table,
    run_backtest,
    write_cumulative_csv,
    write_decisions_csv,
)
from .errors import VmatError
from .lambda_select import DEFAULT_LAMBDA_GRID
from .market_data import load_csv
from .stats_core import normal_quantile
from .synthgen import ExtraFactor, SynthSpec, generate
from .weight_solver import INIT_COINT, INIT_MAXVAR, TradeoffObjective, direction_angle, vmat_descent

SWEEP_AXES = ("lambda", "alpha", "p", "L")

DEFAULT_SWEEP_VALUES = {
    "lambda": list(DEFAULT_LAMBDA_GRID),
    "alpha": [0.4, 0.65, 0.8, 0.9, 0.95, 0.99],
    "p": [5, 7, 10, 13, 17, 21, 25, 30],
    "L": [30, 40, 50, 60, 70, 80],
}

_STRATEGY_DEFAULTS = {
    "data": None,
    "method": "vmat",
    "d": 7,
    "p": 10,
    "L": 60,
    "alpha": 0.999,
    "lam": 1.0,
    "lambda_mode": "fixed",
    "lambda_grid": ",".join(str(v) for v in DEFAULT_LAMBDA_GRID),
    "cv_lookback": 10,
    "lb_lag": None,
    "lb_alpha": 0.05,
    "coint_quantile_convention": "literal",
    "init": None,
    "n_steps": 1,
    "eval_start": None,
    "eval_end": None,
    "workers": 1,
    "seed": 0,
    "out": "vmat-out",
    "config": None,
}


def _add_strategy_flags(parser: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    parser.add_argument("--data", help="wide CSV of adjusted closes: date,TICKER1,...")
    parser.add_argument("--config", default=s, help="JSON file with defaults for any flag")
    parser.add_argument("--method", default=s, choices=ALL_METHODS)
    parser.add_argument("--d", type=int, default=s, help="trading horizon in days")
    parser.add_argument("--p", type=int, default=s, help="AR lag order")
    parser.add_argument("--L", type=int, default=s, help="formation window length")
    parser.add_argument("--alpha", type=float, default=s, help="profit-probability level")
    parser.add_argument("--lambda", dest="lam", type=float, default=s, help="fixed volatility weight")
    parser.add_argument("--lambda-mode", dest="lambda_mode", default=s, choices=("fixed", "cv", "tame"))
    parser.add_argument("--lambda-grid", dest="lambda_grid", default=s, help="comma list, ascending, >= 1")
    parser.add_argument("--cv-lookback", dest="cv_lookback", type=int, default=s)
    parser.add_argument("--lb-lag", dest="lb_lag", type=int, default=s, help="portmanteau lags (default 2p)")
    parser.add_argument("--lb-alpha", dest="lb_alpha", type=float, default=s)
    parser.add_argument(
        "--coint-quantile-convention",
        dest="coint_quantile_convention",
        default=s,
        choices=("literal", "upper-tail"),
    )
    parser.add_argument("--init", default=s, choices=(INIT_COINT, INIT_MAXVAR))
    parser.add_argument("--n-steps", dest="n_steps", type=int, default=s)
    parser.add_argument("--eval-start", dest="eval_start", type=int, default=s)
    parser.add_argument("--eval-end", dest="eval_end", type=int, default=s)
    parser.add_argument("--workers", type=int, default=s)
    parser.add_argument("--seed", type=int, default=s)
    parser.add_argument("--out", default=s, help="output directory")


def _merged_options(args: argparse.Namespace, overrides: Optional[dict] = None) -> dict:
    """defaults < config file < explicit CLI flags."""
    merged = dict(_STRATEGY_DEFAULTS)
    if overrides:
        merged.update(overrides)
    provided = {
        k: v for k, v in vars(args).items()
        if k not in ("func", "command") and v is not None
    }
    config_path = provided.pop("config", None)
    if config_path:
        with open(config_path) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(merged) - {"sweep_axis", "sweep_values", "t"}
        if unknown:
            raise VmatError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    merged.update(provided)
    return merged


def _parse_grid(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(","))


def _build_config(opts: dict) -> StrategyConfig:
    return StrategyConfig(
        method=opts["method"],
        d=int(opts["d"]),
        p=int(opts["p"]),
        L=int(opts["L"]),
        alpha=float(opts["alpha"]),
        lam=float(opts["lam"]),
        lambda_mode=opts["lambda_mode"],
        lambda_grid=_parse_grid(opts["lambda_grid"]),
        cv_lookback=int(opts["cv_lookback"]),
        lb_lag=None if opts["lb_lag"] is None else int(opts["lb_lag"]),
        lb_alpha=float(opts["lb_alpha"]),
        quantile_convention=opts["coint_quantile_convention"],
        init=opts["init"],
        n_steps=int(opts["n_steps"]),
    )


def _load_panel(opts: dict):
    if not opts.get("data"):
        raise VmatError("--data is required for this command")
    return load_csv(opts["data"])


def _eval_indices(panel, cfg: StrategyConfig, opts: dict) -> range:
    full = default_eval_range(panel, cfg)
    start = full.start if opts["eval_start"] is None else max(full.start, int(opts["eval_start"]))
    stop = full.stop if opts["eval_end"] is None else min(full.stop, int(opts["eval_end"]))
    if start >= stop:
        raise VmatError(f"empty evaluation range [{start}, {stop})")
    return range(start, stop)


def _out_dir(opts: dict) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _degeneracy_note(report) -> str:
    bad = [d for d in report.decisions if d.diagnostic]
    if not bad:
        return ""
    return f"{len(bad)}/{len(report.decisions)} days degenerate ({bad[0].diagnostic})"


def cmd_backtest(args: argparse.Namespace) -> int:
    opts = _merged_options(args)
    cfg = _build_config(opts)
    panel = _load_panel(opts)
    indices = _eval_indices(panel, cfg, opts)
    report = run_backtest(panel, cfg, indices, workers=int(opts["workers"]))

    out = _out_dir(opts)
    name = cfg.method
    table = metric_table([(DISPLAY_NAMES[name], report)])
    (out / "metrics.txt").write_text(table + "\n")
    write_decisions_csv(out / f"decisions_{name}.csv", report.decisions)
    write_cumulative_csv(out / f"cumulative_{name}.csv", report.decisions, report.cumulative_pl)
    days = [d.time_index for d in report.decisions]
    plotting.save_cumulative_figure(
        out / "cumulative_pl.png", {DISPLAY_NAMES[name]: (days, report.cumulative_pl)}
    )
    print(table)
    note = _degeneracy_note(report)
    if note:
        print(f"note: {note}")
    print(f"wrote {out}/metrics.txt, decisions_{name}.csv, cumulative_{name}.csv, cumulative_pl.png")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    opts = _merged_options(args)
    panel = _load_panel(opts)
    out = _out_dir(opts)

    named_reports = []
    curves = {}
    shared_cfg = _build_config({**opts, "method": "vmat"})
    indices = _eval_indices(panel, shared_cfg, opts)
    for method in ALL_METHODS:
        cfg = replace(shared_cfg, method=method)
        report = run_backtest(panel, cfg, indices, workers=int(opts["workers"]))
        named_reports.append((DISPLAY_NAMES[method], report))
        write_decisions_csv(out / f"decisions_{method}.csv", report.decisions)
        write_cumulative_csv(out / f"cumulative_{method}.csv", report.decisions, report.cumulative_pl)
        curves[DISPLAY_NAMES[method]] = ([d.time_index for d in report.decisions], report.cumulative_pl)

    table = metric_table(named_reports)
    (out / "comparison.txt").write_text(table + "\n")
    plotting.save_cumulative_figure(out / "compare_cumulative.png", curves)
    print(table)
    for name, report in named_reports:
        note = _degeneracy_note(report)
        if note:
            print(f"note [{name}]: {note}")
    print(f"wrote {out}/comparison.txt plus per-method CSVs and compare_cumulative.png")
    return 0


def _sweep_config(base: dict, axis: str, value: float) -> StrategyConfig:
    opts = dict(base)
    opts["method"] = "vmat"
    if axis == "lambda":
        opts["lam"] = value
        opts["lambda_mode"] = "fixed"
    elif axis == "alpha":
        opts["alpha"] = value
    elif axis == "p":
        opts["p"] = int(value)
    else:
        opts["L"] = int(value)
    return _build_config(opts)


def cmd_sweep(args: argparse.Namespace) -> int:
    opts = _merged_options(args, overrides={"d": 3})  # short horizon is the usual sweep setting
    axis = args.sweep_axis
    values = (
        [float(v) for v in str(args.sweep_values).split(",")]
        if args.sweep_values
        else list(DEFAULT_SWEEP_VALUES[axis])
    )
    if not values:
        raise VmatError("empty sweep value list")
    panel = _load_panel(opts)
    out = _out_dir(opts)
    z95 = normal_quantile(0.975)

    rows = []
    failures = 0
    for value in values:
        try:
            cfg = _sweep_config(opts, axis, value)
            indices = _eval_indices(panel, cfg, opts)
            report = run_backtest(panel, cfg, indices, workers=int(opts["workers"]))
            half = z95 * report.pl_se
            rows.append({
                "value": value,
                "pl_mean": report.pl_mean,
                "pl_se": report.pl_se,
                "ci_low": report.pl_mean - half,
                "ci_high": report.pl_mean + half,
                "signal_rate": report.signal_rate,
                "control_rate": report.control_rate,
                "profit_rate": report.profit_rate,
                "max_drawdown": report.max_drawdown,
                "note": _degeneracy_note(report),
            })
        except (VmatError, ValueError) as exc:
            failures += 1
            rows.append({
                "value": value, "pl_mean": math.nan, "pl_se": math.nan,
                "ci_low": math.nan, "ci_high": math.nan, "signal_rate": math.nan,
                "control_rate": math.nan, "profit_rate": math.nan,
                "max_drawdown": math.nan, "note": f"error: {exc}",
            })

    csv_path = out / f"sweep_{axis}.csv"
    header = ["value", "pl_mean", "pl_se", "ci_low", "ci_high",
              "signal_rate", "control_rate", "profit_rate", "max_drawdown", "note"]

    def cell(v):
        if isinstance(v, float):
            return "" if math.isnan(v) else repr(v)
        return str(v)

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            writer.writerow([str(r["value"])] + [cell(r[h]) for h in header[1:-1]] + [r["note"]])

    ok = [r for r in rows if not math.isnan(r["pl_mean"])]
    if ok:
        plotting.save_sweep_figure(
            out / f"sweep_{axis}.png", axis,
            [r["value"] for r in ok], [r["pl_mean"] for r in ok],
            [r["ci_low"] for r in ok], [r["ci_high"] for r in ok],
        )

    lines = [f"{axis:>8}  {'mean PL':>12}  {'95% CI':>28}  {'SR':>7}"]
    for r in rows:
        if math.isnan(r["pl_mean"]):
            lines.append(f"{r['value']:>8g}  {'-':>12}  {r['note']}")
        else:
            ci = f"[{r['ci_low']:.6g}, {r['ci_high']:.6g}]"
            lines.append(f"{r['value']:>8g}  {r['pl_mean']:>12.6g}  {ci:>28}  {r['signal_rate'] * 100:>6.1f}%")
    if ok:
        best = max(ok, key=lambda r: r["pl_mean"])
        lines.append(f"highest mean PL at {axis}={best['value']:g} (shape above; intervals are 95%)")
    text = "\n".join(lines)
    (out / f"sweep_{axis}.txt").write_text(text + "\n")
    print(text)
    print(f"wrote {csv_path} and sweep_{axis}.png")
    if failures:
        print(f"{failures} sweep value(s) failed; see the note column", file=sys.stderr)
        return 1
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    opts = _merged_options(args, overrides={"d": 3, "n_steps": 10})
    cfg = _build_config(opts)
    panel = _load_panel(opts)
    t = args.t if args.t is not None else panel.n_rows - cfg.d - 1
    if t < cfg.L + cfg.p:
        raise VmatError(f"t={t} leaves no room for the formation window")
    window = panel.log_prices()[t - cfg.L : t + 1]

    out = _out_dir(opts)
    w1_by_init: dict[str, list[float]] = {}
    final_dirs = {}
    for init in (INIT_COINT, INIT_MAXVAR):
        obj = TradeoffObjective(cfg.lam, window, cfg.p)
        weights = vmat_descent(obj, init=init, n_steps=cfg.n_steps)
        history = weights.provenance.w_history
        w1_by_init[init] = [float((w / np.sum(np.abs(w)))[0]) for w in history]
        final_dirs[init] = history[-1]

    csv_path = out / "trace.csv"
    with open(csv_path, "w") as fh:
        fh.write("init,step,w1\n")
        for init, series in w1_by_init.items():
            for step, w1 in enumerate(series, start=1):
                fh.write(f"{init},{step},{repr(w1)}\n")
    steps = list(range(1, cfg.n_steps + 1))
    plotting.save_trace_figure(out / "trace_w1.png", steps, w1_by_init)

    angle = direction_angle(final_dirs[INIT_COINT], final_dirs[INIT_MAXVAR])
    print(f"trace at t={t}: lambda={cfg.lam:g}, {cfg.n_steps} steps")
    for init, series in w1_by_init.items():
        print(f"  init={init}: w1 steps {', '.join(f'{v:.8f}' for v in series)}")
    print(f"  final directions differ by {angle:.3e} rad")
    print(f"wrote {csv_path} and trace_w1.png")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    factors = ()
    if args.factor_kind != "none":
        factors = (
            ExtraFactor(
                sigma=args.factor_sigma,
                kind=args.factor_kind,
                momentum=args.factor_momentum,
                period=args.factor_period,
                level_noise=args.factor_level_noise,
            ),
        )
    spec = SynthSpec(
        k=args.k,
        rows=args.rows,
        hedge_vector=tuple(float(v) for v in args.hedge.split(",")),
        phi=args.phi,
        sigma_spread=args.sigma_spread,
        sigma_trend=args.sigma_trend,
        extra_factors=factors,
        seed=args.seed,
    )
    panel = generate(spec)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    panel.to_csv(out)
    print(f"wrote {panel.n_rows} rows x {panel.n_assets} assets to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vmat", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_back = sub.add_parser("backtest", help="run one strategy over the evaluation period")
    _add_strategy_flags(p_back)
    p_back.set_defaults(func=cmd_backtest)

    p_cmp = sub.add_parser("compare", help="run all six strategies with shared parameters")
    _add_strategy_flags(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_sweep = sub.add_parser("sweep", help="profit sensitivity along one parameter axis")
    _add_strategy_flags(p_sweep)
    p_sweep.add_argument("--sweep-axis", dest="sweep_axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--sweep-values", dest="sweep_values", help="comma list overriding the default grid")
    p_sweep.set_defaults(func=cmd_sweep)

    p_trace = sub.add_parser("trace", help="weight trajectory across optimizer iterations")
    _add_strategy_flags(p_trace)
    p_trace.add_argument("--t", type=int, help="trading time index (default: last feasible)")
    p_trace.set_defaults(func=cmd_trace)

    p_synth = sub.add_parser("synth", help="generate a synthetic panel CSV")
    p_synth.add_argument("--k", type=int, default=2)
    p_synth.add_argument("--rows", type=int, default=1500)
    p_synth.add_argument("--hedge", default="1,-1", help="comma list, length k")
    p_synth.add_argument("--phi", type=float, default=0.9)
    p_synth.add_argument("--sigma-spread", dest="sigma_spread", type=float, default=0.01)
    p_synth.add_argument("--sigma-trend", dest="sigma_trend", type=float, default=0.02)
    p_synth.add_argument("--factor-kind", dest="factor_kind", default="none",
                         choices=("none", "momentum", "regime", "seasonal"))
    p_synth.add_argument("--factor-sigma", dest="factor_sigma", type=float, default=0.03)
    p_synth.add_argument("--factor-momentum", dest="factor_momentum", type=float, default=0.9)
    p_synth.add_argument("--factor-period", dest="factor_period", type=int, default=40)
    p_synth.add_argument("--factor-level-noise", dest="factor_level_noise", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=42)
    p_synth.add_argument("--out", required=True, help="target CSV path")
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VmatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
