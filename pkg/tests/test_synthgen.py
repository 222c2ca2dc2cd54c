import numpy as np
import pytest

from vmat.ar_forecast import fit_ar
from vmat.market_data import FormationWindow, log_window
from vmat.stats_core import ljung_box
from vmat.synthgen import ExtraFactor, SynthSpec, generate
from vmat.weight_solver import coint_weights, direction_angle, maxvar_weights


class TestSpecValidation:
    def test_defaults(self):
        spec = SynthSpec()
        assert (spec.k, spec.rows, spec.phi) == (2, 1500, 0.9)
        assert (spec.sigma_spread, spec.sigma_trend, spec.seed) == (0.01, 0.02, 42)

    def test_hedge_length(self):
        with pytest.raises(ValueError, match="length"):
            SynthSpec(k=3, hedge_vector=(1.0, -1.0))

    def test_hedge_first_component(self):
        with pytest.raises(ValueError, match="first component"):
            SynthSpec(hedge_vector=(0.0, 1.0))

    def test_phi_bounds(self):
        with pytest.raises(ValueError, match="phi"):
            SynthSpec(phi=1.0)

    def test_factor_validation(self):
        with pytest.raises(ValueError, match="kind"):
            ExtraFactor(sigma=0.1, kind="unknown")
        with pytest.raises(ValueError, match="period"):
            ExtraFactor(sigma=0.1, period=1)

    def test_factor_loading_orthogonal_to_hedge(self):
        for hedge in ((1.0, -1.0), (1.0, -0.5), (1.0, -1.0, -1.0)):
            spec = SynthSpec(k=len(hedge), hedge_vector=hedge, seed=1)
            loading = spec.default_factor_loading()
            assert abs(float(loading @ spec.normalized_hedge())) < 1e-10
            assert np.linalg.norm(loading) == pytest.approx(1.0)


class TestGenerate:
    def test_zero_sigmas_give_constant_panel(self):
        panel = generate(SynthSpec(rows=50, sigma_spread=0.0, sigma_trend=0.0))
        assert np.all(panel.prices == panel.prices[0])

    def test_reproducible_bit_for_bit(self):
        spec = SynthSpec(rows=300, seed=11)
        a, b = generate(spec), generate(spec)
        np.testing.assert_array_equal(a.prices, b.prices)
        assert a.timestamps == b.timestamps

    def test_seed_changes_panel(self):
        a = generate(SynthSpec(rows=300, seed=11))
        b = generate(SynthSpec(rows=300, seed=12))
        assert not np.array_equal(a.prices, b.prices)

    def test_shape_and_positivity(self):
        panel = generate(SynthSpec(k=7, rows=1260, hedge_vector=(1,) + (-0.2,) * 6, seed=2))
        assert panel.prices.shape == (1260, 7)
        assert np.all(panel.prices > 0)

    def test_hedge_direction_is_exact_spread(self, default_panel):
        spec = SynthSpec()
        y = default_panel.log_prices() @ spec.normalized_hedge()
        # the combined series is the scripted AR(1) spread, scaled: it must
        # be far tighter than any single asset's walk
        assert y.std() < 0.2 * default_panel.log_prices()[:, 0].std()

    def test_hedge_series_whitens_under_ar1_but_raw_level_does_not(self, default_panel):
        spec = SynthSpec()
        logp = default_panel.log_prices()
        spread = logp @ spec.normalized_hedge()
        model = fit_ar(spread, 1)
        _, p_spread = ljung_box(model.residuals, 10, 1)
        assert p_spread > 0.01
        _, p_raw = ljung_box(logp[:, 0], 10, 0)  # raw log level, no model
        assert p_raw < 1e-6

    def test_trend_scale_controls_maxvar_volume(self):
        stds = {}
        for sigma in (0.02, 0.04):
            panel = generate(SynthSpec(rows=1500, sigma_trend=sigma, seed=42))
            logp = panel.log_prices()
            w = maxvar_weights(logp).w
            stds[sigma] = (logp @ w).std()
        assert stds[0.04] / stds[0.02] == pytest.approx(2.0, rel=0.1)

    def test_coint_recovers_hedge_within_tolerance(self):
        angles = []
        for seed in (42, 43, 44, 45):
            spec = SynthSpec(rows=400, hedge_vector=(1.0, -0.8), seed=seed)
            panel = generate(spec)
            window = log_window(FormationWindow(panel, 399, 250))
            angles.append(direction_angle(coint_weights(window).w, spec.normalized_hedge()))
        assert max(angles) < 0.1

    def test_extra_factor_leaves_spread_untouched(self, echo_spec):
        quiet = generate(SynthSpec(**{**echo_spec.__dict__, "extra_factors": ()}))
        loud = generate(echo_spec)
        h = echo_spec.normalized_hedge()
        np.testing.assert_allclose(quiet.log_prices() @ h, loud.log_prices() @ h, atol=1e-12)

    def test_csv_roundtrip(self, tmp_path):
        from vmat.market_data import load_csv

        panel = generate(SynthSpec(rows=100, seed=4))
        path = tmp_path / "synth.csv"
        panel.to_csv(path)
        loaded = load_csv(path)
        np.testing.assert_allclose(loaded.prices, panel.prices, rtol=1e-12)
        assert loaded.timestamps == panel.timestamps
