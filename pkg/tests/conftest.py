import numpy as np
import pytest

from spotvol import ExogenousFrame, SvxCoeffs, SynthSpec, synthesize
from spotvol.hmc import SamplerConfig


@pytest.fixture(scope="session")
def baseline_truth():
    """Small baseline synthetic dataset shared across tests."""
    spec = SynthSpec(mu=-1.0, phi=0.9, sigma=0.3, n_days=240,
                     mean_price=1000.0, seed=101)
    _, _, truth = synthesize(spec)
    return truth


@pytest.fixture(scope="session")
def svx_truth():
    spec = SynthSpec(mu=-1.0, phi=0.9, sigma=0.3, n_days=241,
                     mean_price=1000.0, seed=202,
                     svx=SvxCoeffs(alpha=0.4, beta1=2.0, beta2=0.1,
                                   beta3=0.01, gamma=-5.0, xi=10.0))
    _, _, truth = synthesize(spec)
    return truth


@pytest.fixture(scope="session")
def svx_frame(svx_truth):
    return ExogenousFrame.from_daily(svx_truth.daily_prices,
                                     svx_truth.daily_temps)


@pytest.fixture(scope="session")
def svx_y(svx_truth):
    return svx_truth.daily_prices.window(1, len(svx_truth.daily_prices))


def fast_sampler(**overrides) -> SamplerConfig:
    """Smallest config the sampler accepts; keeps unit tests quick."""
    kwargs = dict(n_chains=2, warmup=200, draws=500, leapfrog_steps=12,
                  max_workers=2)
    kwargs.update(overrides)
    return SamplerConfig(**kwargs)


def degenerate_fit(model, mu=-1.0, phi=0.9, sigma=0.3, h=None, n_draws=50,
                   coeffs=None):
    """PosteriorFit whose draws all equal one parameter point."""
    from spotvol.posterior import PosteriorFit, summarize_draws

    T = model.T
    if h is None:
        h = np.full(T, mu)
    row = [mu, phi, sigma]
    names = ["mu", "phi", "sigma"]
    if coeffs is not None:
        row += list(coeffs)
        names += ["alpha", "beta1", "beta2", "beta3", "gamma", "xi"]
    row = np.concatenate([row, h])
    names += [f"h[{t}]" for t in range(T)]
    draws = np.tile(row, (n_draws, 1))
    return PosteriorFit(
        draws=draws,
        param_names=names,
        n_chains=2,
        kept_per_chain=n_draws // 2,
        diagnostics={"rhat": {}, "ess": {}, "divergences": 0, "warnings": []},
        summary=summarize_draws(draws, names),
        train_summary=model.train_summary(),
        model_family=model.kind,
    )
