"""Evaluation protocol: point metrics, sliding-window cross-validation and
rolling one-day-ahead forecasting, with a rank-sum comparison of the two
model families.

Fold tasks are independent; they run on a thread pool with per-task RNG
substreams, and failures are recorded per fold rather than aborting the
run (a full grid is 8 combinations x 36 folds of MCMC fits).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientFutureData, LengthMismatch, SpotvolError
from .hmc import SamplerConfig, sample
from .models import BaselineSvModel, SvxModel
from .predictive import ForecastSet, PpdMode, VolMode, forecast
from .series import ExogenousFrame, FoldPlan, PriceSeries
from .stats import mwu_test


def mae(actual, predicted) -> float:
    """Mean absolute error."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.ndim != 1 or len(actual) == 0:
        raise LengthMismatch("need equal-length nonempty vectors")
    return float(np.mean(np.abs(actual - predicted)))


def rmse(actual, predicted) -> float:
    """Root mean squared error."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.ndim != 1 or len(actual) == 0:
        raise LengthMismatch("need equal-length nonempty vectors")
    return float(math.sqrt(np.mean((actual - predicted) ** 2)))


@dataclass(frozen=True)
class MetricReport:
    mae: float
    rmse: float
    n: int
    model_id: str = ""
    hour: int | None = None
    zone: int | None = None
    fold_id: int | None = None

    def __post_init__(self):
        if self.mae < 0 or self.rmse < 0:
            raise ValueError("metrics must be nonnegative")


@dataclass(frozen=True)
class CvCombination:
    """One model-family x hour x zone cell of the cross-validation grid."""

    family: str                       # "baseline" | "svx"
    hour: int
    zone: int
    series: PriceSeries
    exog: ExogenousFrame | None = None

    def __post_init__(self):
        if self.family not in ("baseline", "svx"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "svx":
            if self.exog is None:
                raise ValueError("svx combination needs an exogenous frame")
            if not np.array_equal(self.series.dates, self.exog.dates):
                raise ValueError("series and frame must share dates")

    @property
    def model_id(self) -> str:
        return f"{self.family}-h{self.hour}-z{self.zone}"


@dataclass
class CvSummary:
    reports: dict                     # model_id -> list[MetricReport]
    failures: dict                    # model_id -> list[(fold_id, message)]
    aggregates: dict                  # model_id -> {"mae", "rmse", "n_folds"}
    mwu: dict = field(default_factory=dict)  # metric -> comparison dict | None
    n_folds: int = 0

    def to_json_dict(self) -> dict:
        return {
            "n_folds": self.n_folds,
            "reports": {
                mid: [vars(r) for r in reps]
                for mid, reps in sorted(self.reports.items())
            },
            "failures": {m: list(f) for m, f in sorted(self.failures.items())},
            "aggregates": dict(sorted(self.aggregates.items())),
            "mwu": self.mwu,
        }


@dataclass
class BacktestConfig:
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    n_draws: int = 1000
    mode: PpdMode = PpdMode.POINT_ESTIMATE
    vol_mode: VolMode = VolMode.PROPAGATE
    max_workers: int | None = None
    mwu_exact_threshold: int = 12


def _run_fold(combo: CvCombination, fold, fold_id: int, cfg: BacktestConfig,
              fit_seed: int, fc_seed: int) -> MetricReport:
    a, b, c, d = fold
    if not (b < c):
        raise SpotvolError("train window overlaps test window")
    train_y = combo.series.window(a, b + 1)
    if combo.family == "svx":
        model = SvxModel(train_y, combo.exog.window(a, b + 1))
    else:
        model = BaselineSvModel(train_y)
    fit = sample(model, cfg.sampler, fit_seed)

    horizon = d - c + 1
    exog_future = combo.exog.window(c, d + 1) if combo.family == "svx" else None
    fc = forecast(fit, horizon, n_draws=cfg.n_draws, mode=cfg.mode,
                  vol_mode=cfg.vol_mode, exog_future=exog_future, seed=fc_seed)
    actual = combo.series.values[c:d + 1]
    return MetricReport(
        mae=mae(actual, fc.mean),
        rmse=rmse(actual, fc.mean),
        n=horizon,
        model_id=combo.model_id,
        hour=combo.hour,
        zone=combo.zone,
        fold_id=fold_id,
    )


def cross_validate(combos: list, plan: FoldPlan, cfg: BacktestConfig,
                   seed: int) -> CvSummary:
    """Fit and score every combination on every sliding fold.

    Fold failures are recorded under the combination and skipped in the
    aggregates; the run continues. The pooled MAE and RMSE distributions
    of the two families are compared with a one-tailed rank-sum test of
    "baseline shifted right (worse)".
    """
    for combo in combos:
        if len(combo.series) < plan.folds[-1][3] + 1:
            raise SpotvolError(
                f"{combo.model_id}: series shorter than the fold plan span")

    tasks = [(ci, fi) for ci in range(len(combos)) for fi in range(len(plan))]
    seeds = np.random.SeedSequence(seed).spawn(2 * len(tasks))

    def run(task_idx):
        ci, fi = tasks[task_idx]
        combo = combos[ci]
        fit_seed = int(seeds[2 * task_idx].generate_state(1)[0])
        fc_seed = int(seeds[2 * task_idx + 1].generate_state(1)[0])
        try:
            return _run_fold(combo, plan.folds[fi], fi, cfg, fit_seed, fc_seed)
        except SpotvolError as exc:
            return (combo.model_id, fi, f"{type(exc).__name__}: {exc}")

    workers = cfg.max_workers or (os.cpu_count() or 4)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(tasks))))
    else:
        results = [run(i) for i in range(len(tasks))]

    reports = {c.model_id: [] for c in combos}
    failures = {c.model_id: [] for c in combos}
    for res in results:
        if isinstance(res, MetricReport):
            reports[res.model_id].append(res)
        else:
            mid, fi, msg = res
            failures[mid].append((fi, msg))

    aggregates = {}
    for mid, reps in reports.items():
        if reps:
            aggregates[mid] = {
                "mae": float(np.mean([r.mae for r in reps])),
                "rmse": float(np.mean([r.rmse for r in reps])),
                "n_folds": len(reps),
            }
        else:
            aggregates[mid] = {"mae": None, "rmse": None, "n_folds": 0}

    mwu = {}
    for metric in ("mae", "rmse"):
        base_pool = [getattr(r, metric) for c in combos if c.family == "baseline"
                     for r in reports[c.model_id]]
        svx_pool = [getattr(r, metric) for c in combos if c.family == "svx"
                    for r in reports[c.model_id]]
        if base_pool and svx_pool:
            res = mwu_test(base_pool, svx_pool,
                           exact_threshold=cfg.mwu_exact_threshold, seed=seed)
            mwu[metric] = {
                "u_statistic": res.u_statistic,
                "p_value": res.p_value,
                "method": res.method.value,
                "null_mean": res.null_mean,
                "null_sd": res.null_sd,
                "baseline_mean": float(np.mean(base_pool)),
                "svx_mean": float(np.mean(svx_pool)),
            }
        else:
            mwu[metric] = None

    return CvSummary(reports=reports, failures=failures,
                     aggregates=aggregates, mwu=mwu, n_folds=len(plan))


@dataclass
class RollingResult:
    forecast: ForecastSet
    report: MetricReport
    train_ranges: list                # [(start_date, end_date)] per refit


def rolling_forecast(combo: CvCombination, first_train: tuple,
                     horizon_days: int, cfg: BacktestConfig,
                     seed: int) -> RollingResult:
    """Day-ahead loop: fit on the training window, predict one day, slide
    the window forward one day; repeat `horizon_days` times.

    `first_train` is an inclusive (start, end) date pair resolved against
    the combination's series; the series must extend `horizon_days` past
    its end.
    """
    dates = combo.series.dates
    start = np.datetime64(first_train[0], "D")
    end = np.datetime64(first_train[1], "D")
    a = int(np.searchsorted(dates, start))
    b = int(np.searchsorted(dates, end))
    if a >= len(dates) or dates[a] != start or b >= len(dates) or dates[b] != end:
        raise SpotvolError("first_train range not covered by the series")
    if b + horizon_days >= len(dates):
        raise InsufficientFutureData(
            f"series ends {dates[-1]}, need {horizon_days} days past {end}")

    seeds = np.random.SeedSequence(seed).spawn(2 * horizon_days)
    day_forecasts = []
    train_ranges = []
    for j in range(horizon_days):
        lo, hi = a + j, b + j
        train_ranges.append((dates[lo], dates[hi]))
        train_y = combo.series.window(lo, hi + 1)
        if combo.family == "svx":
            model = SvxModel(train_y, combo.exog.window(lo, hi + 1))
            exog_future = combo.exog.window(hi + 1, hi + 2)
        else:
            model = BaselineSvModel(train_y)
            exog_future = None
        fit = sample(model, cfg.sampler, int(seeds[2 * j].generate_state(1)[0]))
        fc = forecast(fit, 1, n_draws=cfg.n_draws, mode=cfg.mode,
                      vol_mode=cfg.vol_mode, exog_future=exog_future,
                      seed=int(seeds[2 * j + 1].generate_state(1)[0]))
        day_forecasts.append(fc)

    draws = np.column_stack([fc.draws[:, 0] for fc in day_forecasts])
    lo_q, hi_q = np.percentile(draws, [2.5, 97.5], axis=0)
    out_dates = dates[b + 1: b + 1 + horizon_days]
    fcset = ForecastSet(
        draws=draws,
        mean=draws.mean(axis=0),
        ci_low=lo_q,
        ci_high=hi_q,
        vol_mean=np.array([fc.vol_mean[0] for fc in day_forecasts]),
        vol_low=np.array([fc.vol_low[0] for fc in day_forecasts]),
        vol_high=np.array([fc.vol_high[0] for fc in day_forecasts]),
        mode=cfg.mode,
        vol_mode=cfg.vol_mode,
        dates=out_dates,
    )
    actual = combo.series.values[b + 1: b + 1 + horizon_days]
    report = MetricReport(
        mae=mae(actual, fcset.mean),
        rmse=rmse(actual, fcset.mean),
        n=horizon_days,
        model_id=combo.model_id,
        hour=combo.hour,
        zone=combo.zone,
    )
    return RollingResult(forecast=fcset, report=report, train_ranges=train_ranges)
