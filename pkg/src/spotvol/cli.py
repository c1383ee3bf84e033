"""Command-line entry point.

Subcommands: fit, forecast, cv, diagnose, synth, report. All commands are
driven by a declarative config file, write their outputs plus a manifest
into the config's output directory, and are byte-reproducible: re-running
a command from its manifest regenerates identical files.

Exit codes: 0 ok, 1 error, 2 ok with warnings (fit with R-hat above 1.05).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import BacktestConfig, CvCombination, cross_validate
from .config import RunConfig
from .errors import (
    ConfigError,
    IncompatibleFit,
    InsufficientFutureData,
    SpotvolError,
)
from .hmc import sample
from .ingest import export_hourly, load_prices, load_weather, synthesize
from .interpret import pd_ice, residual_report
from .models import BaselineSvModel, SvxModel, raw_coefficients
from .posterior import PosteriorFit
from .predictive import forecast, ppd_insample, volatility_path
from .series import ExogenousFrame, Zone, build_folds, hourly_profile, select_hour
from .stats import adf_test, kmeans2, pacf, polyfit_cubic

log = logging.getLogger("spotvol")

SCALAR_PARAMS = ("mu", "phi", "sigma", "alpha", "beta1", "beta2", "beta3",
                 "gamma", "xi")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))


def _write_manifest(cfg: RunConfig, command: str, outdir: Path,
                    extra_args: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": cfg.raw,
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "version": __version__,
    }
    if extra_args:
        manifest["args"] = extra_args
    _write_json(outdir / f"{command}_manifest.json", manifest)


def _load_series(cfg: RunConfig, hour: int, zone: int, need_weather: bool):
    """Price series at (hour, zone), plus the aligned exogenous frame and
    same-day temperature series when weather data is configured. The first
    day is dropped whenever a frame is built (no lag available there)."""
    prices = load_prices(cfg.data_path("prices", zone))
    series = select_hour(prices, hour, Zone(zone))
    frame = temps_aligned = None
    if need_weather:
        weather = load_weather(cfg.data_path("weather", zone))
        temps = select_hour(weather, hour)
        frame = ExogenousFrame.from_daily(series, temps)
        series = series.window(1, len(series))
        temps_aligned = temps.window(1, len(temps))
    return series, frame, temps_aligned


def _align_to_fit(fit: PosteriorFit, series, frame):
    """Slice the loaded data down to the window the fit was trained on."""
    ts = fit.train_summary
    first = np.datetime64(ts.get("first_date"), "D")
    last = np.datetime64(ts.get("last_date"), "D")
    lo = int(np.searchsorted(series.dates, first))
    hi = int(np.searchsorted(series.dates, last))
    if (lo >= len(series) or series.dates[lo] != first
            or hi >= len(series) or series.dates[hi] != last):
        raise IncompatibleFit(
            "fit was trained on a window the config data does not cover")
    out_series = series.window(lo, hi + 1)
    out_frame = frame.window(lo, hi + 1) if frame is not None else None
    if ts.get("n_obs") != len(out_series):
        raise IncompatibleFit(
            "fit was trained on a different window than the config data")
    return out_series, out_frame


def _fit_stdout_summary(fit: PosteriorFit) -> str:
    lines = [f"family: {fit.model_family}   chains: {fit.n_chains}   "
             f"kept/chain: {fit.kept_per_chain}"]
    lines.append(f"{'param':8s} {'mean':>12s} {'sd':>12s} {'rhat':>8s}")
    for name in SCALAR_PARAMS:
        if name in fit.summary:
            s = fit.summary[name]
            r = fit.diagnostics["rhat"][name]
            lines.append(f"{name:8s} {s['mean']:12.4f} {s['sd']:12.4f} {r:8.4f}")
    if fit.model_family == "svx":
        lines.append("raw-unit coefficients:")
        for name, stats in raw_coefficients(fit).items():
            lines.append(f"  {name:8s} {stats['mean']:+.6g} "
                         f"(sd {stats['sd']:.3g})")
    lines.append(f"max rhat: {fit.diagnostics['max_rhat']:.4f}   "
                 f"divergences: {fit.diagnostics['divergences']}")
    for w in fit.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines)


def cmd_fit(cfg: RunConfig) -> int:
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    series, frame, _ = _load_series(cfg, cfg.hour, cfg.zone,
                                    need_weather=cfg.model == "svx")
    train_days = cfg.get("fit", "train_days")
    if train_days:
        series = series.window(0, int(train_days))
        if frame is not None:
            frame = frame.window(0, int(train_days))
    if cfg.model == "svx":
        model = SvxModel(series, frame)
    else:
        model = BaselineSvModel(series)
    log.info("fitting %s on %d days (hour %d, zone %d)",
             cfg.model, model.T, cfg.hour, cfg.zone)
    fit = sample(model, cfg.sampler_config(), cfg.seed)
    fit.save(outdir / "fit.json")
    _write_manifest(cfg, "fit", outdir)
    print(_fit_stdout_summary(fit))
    return 2 if fit.diagnostics["max_rhat"] > 1.05 else 0


def cmd_forecast(cfg: RunConfig, fit_path) -> int:
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    fit = PosteriorFit.load(fit_path)
    if fit.model_family != cfg.model:
        raise IncompatibleFit(
            f"fit is {fit.model_family!r} but config requests {cfg.model!r}")
    settings = cfg.forecast_settings()
    horizon = settings["horizon"]

    exog_future = None
    if fit.model_family == "svx":
        _, frame, _ = _load_series(cfg, cfg.hour, cfg.zone, need_weather=True)
        last = np.datetime64(fit.train_summary["last_date"], "D")
        start = int(np.searchsorted(frame.dates, last)) + 1
        if start > len(frame) or frame.dates[start - 1] != last \
                or start + horizon > len(frame):
            raise InsufficientFutureData(
                "data files do not cover the forecast horizon after "
                f"{fit.train_summary['last_date']}")
        exog_future = frame.window(start, start + horizon)

    fc = forecast(fit, horizon, n_draws=settings["n_draws"],
                  mode=settings["mode"], vol_mode=settings["vol_mode"],
                  exog_future=exog_future, seed=cfg.seed)
    fc.to_csv(outdir / "forecast.csv")
    fc.save_json(outdir / "forecast.json")
    _write_manifest(cfg, "forecast", outdir, {"fit": str(fit_path)})
    print(f"forecast horizon {horizon} written to {outdir / 'forecast.csv'}")
    for t in range(fc.horizon):
        label = str(fc.dates[t]) if fc.dates is not None else str(t)
        print(f"  {label}: mean {fc.mean[t]:.2f} "
              f"[{fc.ci_low[t]:.2f}, {fc.ci_high[t]:.2f}]")
    return 0


def cmd_cv(cfg: RunConfig) -> int:
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    section = cfg.get("cv", default={}) or {}
    combos_cfg = section.get("combinations")
    if not combos_cfg:
        raise ConfigError("cv.combinations must list at least one entry")

    has_weather = bool(cfg.get("data", "weather"))
    combos = []
    for entry in combos_cfg:
        family = entry.get("family", "baseline")
        hour = int(entry.get("hour", cfg.hour))
        zone = int(entry.get("zone", cfg.zone))
        series, frame, _ = _load_series(cfg, hour, zone,
                                        need_weather=has_weather)
        combos.append(CvCombination(family=family, hour=hour, zone=zone,
                                    series=series, exog=frame))

    total = section.get("total_days") or min(len(c.series) for c in combos)
    plan = build_folds(int(total), int(section.get("train_days", 360)),
                       int(section.get("test_days", 90)))
    bt_cfg = BacktestConfig(
        sampler=cfg.sampler_config(),
        n_draws=int(section.get("n_draws", 1000)),
        mode=section.get("mode", "point"),
        vol_mode=section.get("vol_mode", "propagate"),
        max_workers=section.get("max_workers"),
    )
    log.info("cross-validating %d combinations over %d folds",
             len(combos), len(plan))
    summary = cross_validate(combos, plan, bt_cfg, cfg.seed)

    _write_json(outdir / "cv_summary.json", summary.to_json_dict())
    with (outdir / "cv_folds.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "fold_id", "mae", "rmse", "n"])
        for mid in sorted(summary.reports):
            for r in summary.reports[mid]:
                writer.writerow([mid, r.fold_id, repr(r.mae), repr(r.rmse), r.n])
    _write_manifest(cfg, "cv", outdir)

    print(f"{len(plan)} folds x {len(combos)} combinations")
    for mid, agg in sorted(summary.aggregates.items()):
        if agg["n_folds"]:
            print(f"  {mid:24s} mae {agg['mae']:10.3f}  rmse {agg['rmse']:10.3f}"
                  f"  folds {agg['n_folds']}")
        else:
            print(f"  {mid:24s} all folds failed")
    for metric, res in summary.mwu.items():
        if res:
            print(f"  mwu[{metric}]: U={res['u_statistic']:.0f} "
                  f"p={res['p_value']:.4f} ({res['method']})")
    return 0


def cmd_diagnose(cfg: RunConfig, fit_path=None) -> int:
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    section = cfg.get("diagnose", default={}) or {}
    fit_path = fit_path or section.get("fit")
    has_weather = bool(cfg.get("data", "weather"))

    series, frame, temps = _load_series(cfg, cfg.hour, cfg.zone,
                                        need_weather=has_weather)
    y = series.values
    report: dict = {}

    try:  # needs records at every hour; single-hour exports skip it
        report["hourly_profile"] = hourly_profile(
            load_prices(cfg.data_path("prices", cfg.zone))).tolist()
    except SpotvolError:
        pass

    adf = adf_test(y, max_lags=section.get("adf_max_lags"))
    report["adf"] = {
        "statistic": adf.statistic, "p_value": adf.p_value,
        "n_lags_used": adf.n_lags_used, "conclusion": adf.conclusion.value,
    }

    max_lag = int(section.get("pacf_max_lag", 42))
    max_lag = min(max_lag, len(y) // 4 - 1)
    pacf_vals = pacf(y, max_lag)
    report["pacf"] = pacf_vals.tolist()
    with (outdir / "pacf.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag", "pacf"])
        for k, v in enumerate(pacf_vals):
            writer.writerow([k, repr(float(v))])

    if has_weather:
        temp = temps.values  # same-day pairing for the correlation analysis
        points = np.column_stack([temp, y])
        km = kmeans2(points, seed=cfg.seed)
        report["kmeans"] = {
            "centroids": km.centroids.tolist(),
            "correlations": list(km.correlations),
            "inertia": km.inertia,
        }
        report["cubic_fit"] = polyfit_cubic(temp, y).tolist()

    if fit_path:
        fit = PosteriorFit.load(fit_path)
        series, frame = _align_to_fit(fit, series, frame)
        y = series.values
        if fit.model_family == "svx":
            model = SvxModel(series, frame)
        else:
            model = BaselineSvModel(series)
        ppd = ppd_insample(fit, model, n_draws=int(section.get("n_draws", 1000)),
                           seed=cfg.seed)
        res = residual_report(y, ppd.mean)
        report["residuals"] = {
            "r_resid_pred": res.r_resid_pred,
            "r_resid_pred_degenerate": res.r_resid_pred_degenerate,
            "r_pred_actual": res.r_pred_actual,
            "r_pred_actual_degenerate": res.r_pred_actual_degenerate,
        }
        with (outdir / "residuals.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["residual", "qq_theoretical", "qq_sample",
                             "predicted_mean"])
            for i in range(len(res.residuals)):
                writer.writerow([repr(float(res.residuals[i])),
                                 repr(float(res.qq_theoretical[i])),
                                 repr(float(res.qq_sample[i])),
                                 repr(float(ppd.mean[i]))])
        vol_mean, vol_lo, vol_hi = volatility_path(fit)
        with (outdir / "volatility.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "vol_mean", "vol_low", "vol_high"])
            for i in range(len(vol_mean)):
                writer.writerow([str(series.dates[i]), repr(float(vol_mean[i])),
                                 repr(float(vol_lo[i])), repr(float(vol_hi[i]))])
        if fit.model_family == "svx":
            report["raw_coefficients"] = raw_coefficients(fit)
            for feature in ("temperature", "weekday"):
                curve = pd_ice(fit, model, feature,
                               grid_size=int(section.get("pd_grid_size", 25)))
                report[f"pd_{feature}"] = {
                    "grid": curve.grid.tolist(),
                    "pd": curve.pd.tolist(),
                    "feature_independence_r": curve.feature_independence_r,
                }
                with (outdir / f"pd_{feature}.csv").open("w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow([feature, "pd"])
                    for g, v in zip(curve.grid, curve.pd):
                        writer.writerow([repr(float(g)), repr(float(v))])

    _write_json(outdir / "diagnostics.json", report)
    _write_manifest(cfg, "diagnose", outdir,
                    {"fit": str(fit_path)} if fit_path else None)
    print(f"adf: stat={adf.statistic:.3f} p={adf.p_value:.4f} "
          f"-> {adf.conclusion.value}")
    print(f"pacf(1) = {pacf_vals[1]:.4f}" if len(pacf_vals) > 1 else "")
    if "kmeans" in report:
        r = report["kmeans"]["correlations"]
        print(f"kmeans clusters r: cool={r[0]:.3f} warm={r[1]:.3f}")
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    spec = cfg.synth_spec()
    prices, temps, truth = synthesize(spec)
    export_hourly(prices, outdir / "prices.csv", "price")
    export_hourly(temps, outdir / "weather.csv", "temp_c")
    truth_doc = {
        "spec": {
            "mu": spec.mu, "phi": spec.phi, "sigma": spec.sigma,
            "n_days": spec.n_days, "mean_price": spec.mean_price,
            "seed": spec.seed, "start_date": spec.start_date,
            "hour": spec.hour, "zone": spec.zone,
            "svx": vars(spec.svx) if spec.svx else None,
        },
        "h": truth.h.tolist(),
        "daily_prices": truth.daily_prices.values.tolist(),
        "daily_temps": truth.daily_temps.values.tolist(),
        "dates": [str(d) for d in truth.daily_prices.dates],
    }
    _write_json(outdir / "synth_truth.json", truth_doc)
    _write_manifest(cfg, "synth", outdir)
    print(f"synthesized {spec.n_days} days x 24 hours into {outdir}")
    return 0


def cmd_report(run_dir) -> int:
    run_dir = Path(run_dir)
    if not run_dir.exists():
        raise ConfigError(f"run directory {run_dir} does not exist")
    lines = ["# Run report", ""]
    fit_file = run_dir / "fit.json"
    if fit_file.exists():
        fit = PosteriorFit.load(fit_file)
        lines += [f"## Fit ({fit.model_family})", "",
                  "| param | mean | sd | rhat |", "| - | - | - | - |"]
        for name in SCALAR_PARAMS:
            if name in fit.summary:
                s = fit.summary[name]
                lines.append(f"| {name} | {s['mean']:.4f} | {s['sd']:.4f} "
                             f"| {fit.diagnostics['rhat'][name]:.4f} |")
        lines += ["", f"max rhat {fit.diagnostics['max_rhat']:.4f}, "
                      f"divergences {fit.diagnostics['divergences']}", ""]
    cv_file = run_dir / "cv_summary.json"
    if cv_file.exists():
        cv = json.loads(cv_file.read_text())
        lines += ["## Cross-validation", "",
                  "| model | mae | rmse | folds |", "| - | - | - | - |"]
        for mid, agg in sorted(cv["aggregates"].items()):
            if agg["n_folds"]:
                lines.append(f"| {mid} | {agg['mae']:.3f} | {agg['rmse']:.3f} "
                             f"| {agg['n_folds']} |")
        for metric, res in (cv.get("mwu") or {}).items():
            if res:
                lines.append(f"- MWU {metric}: U={res['u_statistic']:.0f}, "
                             f"p={res['p_value']:.4f}")
        lines.append("")
    fc_file = run_dir / "forecast.json"
    if fc_file.exists():
        fc = json.loads(fc_file.read_text())
        lines += ["## Forecast", "", "| day | mean | 95% CI |", "| - | - | - |"]
        dates = fc.get("dates") or [str(i) for i in range(len(fc["mean"]))]
        for d, m, lo, hi in zip(dates, fc["mean"], fc["ci_low"], fc["ci_high"]):
            lines.append(f"| {d} | {m:.2f} | [{lo:.2f}, {hi:.2f}] |")
        lines.append("")
    diag_file = run_dir / "diagnostics.json"
    if diag_file.exists():
        diag = json.loads(diag_file.read_text())
        lines += ["## Diagnostics", ""]
        if "adf" in diag:
            a = diag["adf"]
            lines.append(f"- ADF: stat {a['statistic']:.3f}, p {a['p_value']:.4f}"
                         f" -> {a['conclusion']}")
        if "kmeans" in diag:
            r = diag["kmeans"]["correlations"]
            lines.append(f"- price/temperature cluster correlations: "
                         f"{r[0]:.3f}, {r[1]:.3f}")
        lines.append("")
    text = "\n".join(lines)
    (run_dir / "report.md").write_text(text)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spotvol",
        description="Stochastic-volatility forecasting for day-ahead "
                    "electricity spot prices")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("-c", "--config", help="path to the run config")
            p.add_argument("--from-manifest",
                           help="re-run from a previously written manifest")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    add("fit", "fit the configured model and save the posterior")
    p_fc = add("forecast", "forecast past a fitted model's window")
    p_fc.add_argument("--fit", help="path to fit.json", default=None)
    add("cv", "sliding-window cross-validation over model combinations")
    p_diag = add("diagnose", "stationarity, correlation and residual reports")
    p_diag.add_argument("--fit", help="optional fit.json for model-level reports",
                        default=None)
    add("synth", "generate synthetic price/weather CSVs")
    p_rep = add("report", "assemble a markdown report from a run directory",
                needs_config=False)
    p_rep.add_argument("--run-dir", required=True)
    return parser


def _config_from_args(args) -> tuple:
    """Resolve (config, extra) from --config or --from-manifest."""
    manifest_args = {}
    if getattr(args, "from_manifest", None):
        doc = json.loads(Path(args.from_manifest).read_text())
        if doc.get("command") != args.command:
            raise ConfigError(
                f"manifest was written by {doc.get('command')!r}, "
                f"not {args.command!r}")
        manifest_args = doc.get("args") or {}
        return RunConfig.from_dict(doc["config"]), manifest_args
    if not getattr(args, "config", None):
        raise ConfigError("provide --config or --from-manifest")
    return RunConfig.load(args.config), manifest_args


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args.run_dir)
        cfg, manifest_args = _config_from_args(args)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "forecast":
            fit_path = args.fit or manifest_args.get("fit")
            if not fit_path:
                raise ConfigError("forecast needs --fit (or a manifest with one)")
            return cmd_forecast(cfg, fit_path)
        if args.command == "cv":
            return cmd_cv(cfg)
        if args.command == "diagnose":
            fit_path = getattr(args, "fit", None) or manifest_args.get("fit")
            return cmd_diagnose(cfg, fit_path)
        if args.command == "synth":
            return cmd_synth(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except SpotvolError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
