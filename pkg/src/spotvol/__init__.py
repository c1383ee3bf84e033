"""Bayesian stochastic-volatility forecasting for day-ahead electricity
spot prices: native HMC inference, posterior predictive forecasting,
sliding-window backtesting and the accompanying diagnostics."""

from .backtest import (
    BacktestConfig,
    CvCombination,
    CvSummary,
    MetricReport,
    RollingResult,
    cross_validate,
    mae,
    rmse,
    rolling_forecast,
)
from .diagnostics import ess, split_rhat
from .hmc import SamplerConfig, rhat, sample
from .ingest import (
    SvxCoeffs,
    SynthSpec,
    SynthTruth,
    TempSpec,
    export_hourly,
    load_prices,
    load_weather,
    synthesize,
)
from .interpret import PdCurve, ResidualReport, pd_ice, residual_report
from .models import BaselineSvModel, Standardizer, SvxModel, raw_coefficients
from .posterior import PosteriorFit
from .predictive import (
    ForecastSet,
    PpdMode,
    VolMode,
    forecast,
    ppd_insample,
    volatility_path,
)
from .series import (
    DailySeries,
    ExogenousFrame,
    FoldPlan,
    HourlyTable,
    PriceSeries,
    Zone,
    build_folds,
    hourly_profile,
    select_hour,
)
from .stats import (
    AdfResult,
    KmeansResult,
    MwuResult,
    adf_test,
    kmeans2,
    mwu_test,
    pacf,
    pacf_durbin_levinson,
    pearson,
    polyfit_cubic,
)

__version__ = "0.1.0"
