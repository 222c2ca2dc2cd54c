import numpy as np
import pytest

from vmat.synthgen import ExtraFactor, SynthSpec, generate


@pytest.fixture(scope="session")
def default_panel():
    """The stock synthetic pair: shared trend plus AR(1) spread."""
    return generate(SynthSpec())


@pytest.fixture(scope="session")
def profit_panel():
    """Stationary spread plus a dominant, strongly trending factor.

    Tuned so trend-following trades are clearly profitable while the
    cointegration baseline stays near zero; used by the profitability
    ordering checks.
    """
    spec = SynthSpec(
        rows=1100,
        phi=0.75,
        sigma_spread=0.008,
        sigma_trend=0.01,
        extra_factors=(ExtraFactor(sigma=0.025, kind="momentum", momentum=0.97),),
        seed=7,
    )
    return generate(spec)


@pytest.fixture(scope="session")
def echo_spec():
    """Spread plus a high-volume lagged-echo factor a 2-lag fit cannot see.

    Designed separation for the lambda selectors: at lambda=1 the optimizer
    (coint init) stays on the hedge direction, at lambda=30 it jumps to the
    echo direction whose residuals fail the whiteness test but whose spikes
    revert profitably.
    """
    return SynthSpec(
        rows=600,
        phi=0.9,
        sigma_spread=0.02,
        sigma_trend=0.002,
        extra_factors=(ExtraFactor(sigma=0.05, kind="echo", momentum=0.7, period=3),),
        seed=5,
    )


@pytest.fixture(scope="session")
def echo_panel(echo_spec):
    return generate(echo_spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
