"""Acceptance gate: one test per release criterion, each printing a
pass/fail line (run with ``pytest tests/test_acceptance.py -v -s``).

Criterion 3's step-1-to-step-2 tolerance is known not to hold on the stock
synthetic panels at their pinned noise levels; the test states the measured
gap and fails honestly rather than loosening the bound.  See the project
notes for the analysis.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from vmat.ar_forecast import ArModel, ForecastPath, forecast
from vmat.backtester import StrategyConfig, run_backtest, run_trade
from vmat.cli import main
from vmat.market_data import PricePanel
from vmat.signal_engine import ar_thresholds
from vmat.stats_core import chi2_sf, normal_cdf, ols, top_eigenpair
from vmat.synthgen import SynthSpec, generate
from vmat.weight_solver import (
    TradeoffObjective,
    direction_angle,
    k_matrix,
    maxvar_weights,
    objective_value,
    vmat_descent,
)

from .oracles import (
    chi2_cdf_quadrature,
    interval_product,
    jacobi_eigen,
    normal_cdf_quadrature,
    ols_normal_equations,
    simulate_ar_paths,
    tradeoff_objective_direct,
)
from .test_backtester import EVAL_DAYS, SCRIPT_CFG, scripted_path


def report(number, label, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] criterion {number:02d} {label}: {status}{suffix}")


def random_window(rng, rows, k):
    steps = rng.normal(scale=0.02, size=(rows, k))
    return np.log(100.0) + np.cumsum(steps, axis=0) + rng.normal(scale=0.01, size=(rows, k))


def test_c01_quadratic_form_identity():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(2, 6))
        rows = int(rng.integers(40, 81))
        p = int(rng.integers(1, 6))
        window = random_window(rng, rows, k)
        lam = float(rng.uniform(1.0, 30.0))
        obj = TradeoffObjective(lam, window, p)
        beta = rng.uniform(-0.9, 0.9, size=p)
        K = k_matrix(obj, beta)
        w = rng.normal(size=k)
        w /= np.linalg.norm(w)
        direct = tradeoff_objective_direct(window, w, beta, lam)
        quad = float(w @ K @ w)
        via_obj = objective_value(obj, w, beta)
        scale = max(1.0, abs(direct))
        worst = max(worst, abs(quad - direct) / scale, abs(via_obj - direct) / scale)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 5.0
    report(1, "quadratic-form identity", ok, f"worst rel err {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-8
    assert elapsed < 5.0


def test_c02_coordinate_ascent_monotonicity():
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst_drop = 0.0
    for trial in range(50):
        k = 2 + trial % 4
        window = random_window(rng, int(rng.integers(50, 90)), k)
        lam = float(rng.choice([1.0, 3.0, 10.0, 30.0]))
        obj = TradeoffObjective(lam, window, int(rng.integers(1, 5)))
        init = "coint" if trial % 2 else "maxvar"
        trace = vmat_descent(obj, init=init, n_steps=3).provenance.objective_trace
        for a, b in zip(trace, trace[1:]):
            worst_drop = max(worst_drop, (a - b) / max(1.0, abs(a)))
    elapsed = time.perf_counter() - start
    ok = worst_drop <= 1e-9 and elapsed < 10.0
    report(2, "coordinate-ascent monotonicity", ok, f"worst drop {worst_drop:.2e}, {elapsed:.2f}s")
    assert worst_drop <= 1e-9
    assert elapsed < 10.0


def test_c03_one_step_convergence():
    start = time.perf_counter()
    step_gaps = []
    init_gaps = []
    for seed in (42, 43, 44):
        panel = generate(SynthSpec(seed=seed))
        t = panel.n_rows - 4  # last feasible trading time at the short horizon
        window = panel.log_prices()[t - 60 : t + 1]
        finals = {}
        for init in ("coint", "maxvar"):
            history = vmat_descent(
                TradeoffObjective(1.0, window, 10), init=init, n_steps=2
            ).provenance.w_history
            step_gaps.append(float(np.linalg.norm(history[1] - history[0])))
            finals[init] = history[-1]
        init_gaps.append(direction_angle(finals["coint"], finals["maxvar"]))
    elapsed = time.perf_counter() - start
    ok_steps = max(step_gaps) < 1e-6
    ok_inits = max(init_gaps) < 1e-3
    ok = ok_steps and ok_inits and elapsed < 5.0
    report(
        3,
        "one-step convergence",
        ok,
        f"max |w2-w1| {max(step_gaps):.2e} (bound 1e-6), max init angle {max(init_gaps):.2e}, {elapsed:.2f}s",
    )
    assert ok_inits, f"init agreement failed: {max(init_gaps):.3e}"
    assert elapsed < 5.0
    assert ok_steps, (
        f"step-2 iterate moved {max(step_gaps):.3e} > 1e-6 from step 1 on the stock panels; "
        "estimation noise in the lag fit bounds the one-step fixed-point gap near 1e-3..1e-5 "
        "at the pinned noise levels (see notes/decisions ledger)"
    )


def test_c04_lambda_dominance():
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(5):
        window = random_window(rng, 70, 3)
        obj = TradeoffObjective(1e6, window, 4)
        w = vmat_descent(obj, init="maxvar", n_steps=1).w
        reference = maxvar_weights(obj.volatility_rows()).w
        worst = max(worst, direction_angle(w, reference))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-3 and elapsed < 1.0
    report(4, "lambda-infinity dominance", ok, f"worst angle {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-3
    assert elapsed < 1.0


def test_c05_forecast_error_calibration():
    start = time.perf_counter()
    model = ArModel(2, np.array([0.5, -0.3]), 0.0, 1.0)
    recent = np.array([0.3, -0.2])
    path = forecast(model, recent, 7)
    sims = simulate_ar_paths([0.5, -0.3], 1.0, recent, 7, n_paths=100_000, seed=505)
    empirical = sims.std(axis=0, ddof=1)
    rel = np.abs(path.err_std - empirical) / empirical
    elapsed = time.perf_counter() - start
    ok = float(rel.max()) < 0.03 and elapsed < 30.0
    report(5, "forecast-error calibration", ok, f"worst rel dev {rel.max():.3f}, {elapsed:.1f}s")
    assert float(rel.max()) < 0.03
    assert elapsed < 30.0


def test_c06_threshold_equation_residual():
    rng = np.random.default_rng(606)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 15))
        point = rng.normal(0.0, 1.0, size=d)
        err = rng.uniform(0.05, 2.0, size=d)
        alpha = float(rng.uniform(0.55, 0.999))
        pair = ar_thresholds(ForecastPath(d, point, err), alpha)
        worst = max(
            worst,
            abs(interval_product(pair.short_threshold, point, err) - alpha),
            abs(interval_product(pair.long_threshold, point, err) - (1 - alpha)),
        )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 2.0
    report(6, "threshold-equation residual", ok, f"worst residual {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-9
    assert elapsed < 2.0


def test_c07_oracle_equivalence():
    rng = np.random.default_rng(707)
    start = time.perf_counter()

    ols_worst = 0.0
    for _ in range(10):
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        ols_worst = max(ols_worst, float(np.max(np.abs(
            ols(X, y).coefficients - ols_normal_equations(X, y)
        ))))

    eig_val_worst = eig_vec_worst = 0.0
    for _ in range(10):
        K = rng.normal(size=(6, 6))
        K = K + K.T
        pair = top_eigenpair(K)
        values, vectors = jacobi_eigen(K)
        eig_val_worst = max(eig_val_worst, abs(pair.value - values[-1]))
        eig_vec_worst = max(eig_vec_worst, float(1.0 - abs(vectors[:, -1] @ pair.vector)))

    cdf_worst = max(
        abs(normal_cdf(z) - normal_cdf_quadrature(z))
        for z in (-4.0, -1.9599, -0.3, 0.0, 0.7, 1.9599, 3.5)
    )
    chi_worst = max(
        abs(chi2_sf(x, dof) - (1.0 - chi2_cdf_quadrature(x, dof)))
        for dof in (1, 2, 5, 10)
        for x in (0.3, 2.0, 9.0, 25.0)
    )
    elapsed = time.perf_counter() - start
    ok = (
        ols_worst <= 1e-9
        and eig_val_worst <= 1e-8
        and eig_vec_worst <= 1e-6
        and cdf_worst <= 1e-8
        and chi_worst <= 1e-6
        and elapsed < 30.0
    )
    report(
        7,
        "oracle equivalence",
        ok,
        f"ols {ols_worst:.1e}, eig {eig_val_worst:.1e}/{eig_vec_worst:.1e}, "
        f"cdf {cdf_worst:.1e}, chi2 {chi_worst:.1e}, {elapsed:.1f}s",
    )
    assert ols_worst <= 1e-9
    assert eig_val_worst <= 1e-8
    assert eig_vec_worst <= 1e-6
    assert cdf_worst <= 1e-8
    assert chi_worst <= 1e-6
    assert elapsed < 30.0


def test_c08_backtest_fixture():
    s = scripted_path()
    dates = tuple(str(np.datetime64("2020-01-01") + np.arange(113)[i]) for i in range(113))
    panel = PricePanel(dates, ("A", "B"), np.exp(np.column_stack([s, s])))
    rep = run_backtest(panel, StrategyConfig(**SCRIPT_CFG), EVAL_DAYS)

    pls = np.array([0.01, 0, 0, 0, -0.02, 0, 0, 0, 0.01, 0])
    ok = (
        [d.delta for d in rep.decisions] == [-1, 0, 0, 0, 1, 0, 0, 0, -1, 0]
        and rep.signal_rate == 0.3
        and rep.profit_rate == 0.2
        and rep.control_rate == 2.0 / 3.0
        and abs(rep.pl_mean) <= 1e-12
        and abs(rep.max_drawdown + 0.02) <= 1e-12
        and abs(rep.pl_se - pls.std(ddof=1) / math.sqrt(10)) <= 1e-12
    )
    report(8, "hand-built backtest fixture", ok)
    assert [d.delta for d in rep.decisions] == [-1, 0, 0, 0, 1, 0, 0, 0, -1, 0]
    assert rep.signal_rate == 0.3 and rep.profit_rate == 0.2
    assert rep.control_rate == 2.0 / 3.0
    assert abs(rep.pl_mean) <= 1e-12
    assert abs(rep.max_drawdown + 0.02) <= 1e-12
    assert abs(rep.pl_se - pls.std(ddof=1) / math.sqrt(10)) <= 1e-12


def test_c09_synthetic_profitability_ordering(profit_panel):
    start = time.perf_counter()
    eval_days = range(80, 1080)
    reports = {
        method: run_backtest(profit_panel, StrategyConfig(method=method), eval_days)
        for method in ("vmat_tame", "coint", "coint_ar")
    }
    vm, co = reports["vmat_tame"], reports["coint"]
    t_stat = (vm.pl_mean - co.pl_mean) / math.hypot(vm.pl_se, co.pl_se)
    cr = reports["coint_ar"].control_rate
    elapsed = time.perf_counter() - start
    ok = t_stat > 2.0 and cr > 0.9 and elapsed < 300.0
    report(
        9,
        "synthetic profitability ordering",
        ok,
        f"tuned-vs-baseline t={t_stat:.1f}, reverting-spread control rate {cr:.3f}, {elapsed:.0f}s",
    )
    assert t_stat > 2.0
    assert cr > 0.9
    assert elapsed < 300.0


def test_c10_causality_audit(default_panel):
    rng = np.random.default_rng(1010)
    cfg_pool = [StrategyConfig(method="vmat"), StrategyConfig(method="coint")]
    full_range = range(70, default_panel.n_rows - 7)
    times = rng.choice(np.asarray(full_range), size=100, replace=False)
    identical = True
    for i, t in enumerate(sorted(int(x) for x in times)):
        cfg = cfg_pool[i % 2]
        full = run_trade(default_panel, t, cfg)
        cut = run_trade(default_panel.truncated(t + cfg.d + 1), t, cfg)
        same = (
            full.delta == cut.delta
            and full.bail_offset == cut.bail_offset
            and full.pl == cut.pl
            and (full.y_now == cut.y_now or (math.isnan(full.y_now) and math.isnan(cut.y_now)))
            and (full.weights is None) == (cut.weights is None)
        )
        if same and full.weights is not None:
            same = np.array_equal(full.weights.w, cut.weights.w)
            same = same and full.thresholds.long_threshold == cut.thresholds.long_threshold
            same = same and full.thresholds.short_threshold == cut.thresholds.short_threshold
        identical = identical and same
    report(10, "causality audit", identical)
    assert identical


def test_c11_compare_determinism(echo_panel, tmp_path):
    data = tmp_path / "panel.csv"
    echo_panel.to_csv(data)
    outs = []
    for name, workers in (("a", "1"), ("b", "4")):
        out = tmp_path / name
        code = main([
            "compare", "--data", str(data), "--p", "2", "--alpha", "0.9",
            "--lambda-grid", "1,30", "--cv-lookback", "5",
            "--eval-start", "150", "--eval-end", "168",
            "--workers", workers, "--seed", "11", "--out", str(out),
        ])
        assert code == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    identical = names == sorted(p.name for p in outs[1].iterdir()) and all(
        (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names
    )
    report(11, "byte-identical comparison runs", identical, f"{len(names)} files")
    assert identical


def test_c12_sweep_grids_and_intervals(echo_panel, profit_panel, tmp_path):
    data = tmp_path / "echo.csv"
    echo_panel.to_csv(data)
    expected = {
        "lambda": [1, 3, 5, 7, 10, 13, 20, 30],
        "alpha": [0.4, 0.65, 0.8, 0.9, 0.95, 0.99],
        "p": [5, 7, 10, 13, 17, 21, 25, 30],
        "L": [30, 40, 50, 60, 70, 80],
    }
    import csv as csvmod

    from vmat.stats_core import normal_quantile

    z95 = normal_quantile(0.975)
    counts = {}
    for axis in expected:
        out = tmp_path / f"sweep_{axis}"
        args = ["sweep", "--data", str(data), "--sweep-axis", axis,
                "--eval-start", "150", "--eval-end", "250", "--out", str(out)]
        if axis != "p":
            args += ["--p", "2"]
        else:
            args += ["--L", "80"]  # keeps the deepest lag order feasible
        if axis != "alpha":
            args += ["--alpha", "0.9"]
        code = main(args)
        assert code == 0, axis
        with open(out / f"sweep_{axis}.csv", newline="") as fh:
            rows = list(csvmod.DictReader(fh))
        counts[axis] = len(rows)
        assert [float(r["value"]) for r in rows] == [float(v) for v in expected[axis]]
        for r in rows:
            if r["pl_mean"] == "":
                continue
            mean, se = float(r["pl_mean"]), float(r["pl_se"])
            assert float(r["ci_low"]) == pytest.approx(mean - z95 * se, abs=1e-12)
            assert float(r["ci_high"]) == pytest.approx(mean + z95 * se, abs=1e-12)

    # participation shape: on the trending construction, raising alpha can
    # only remove signals (the band widens pointwise for fixed forecasts)
    srs = []
    for alpha in (0.65, 0.8, 0.9, 0.95, 0.99):
        cfg = StrategyConfig(method="vmat", alpha=alpha)
        srs.append(run_backtest(profit_panel, cfg, range(80, 380)).signal_rate)
    monotone = all(b <= a + 1e-12 for a, b in zip(srs, srs[1:]))

    ok = counts == {"lambda": 8, "alpha": 6, "p": 8, "L": 6} and monotone
    report(12, "sweep grids and intervals", ok, f"counts {counts}, SR path {['%.2f' % s for s in srs]}")
    assert counts == {"lambda": 8, "alpha": 6, "p": 8, "L": 6}
    assert monotone
