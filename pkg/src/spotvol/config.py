"""Declarative run configuration: loading, validation, canonical hashing.

A single YAML (or JSON) file drives every CLI command. Paths are resolved
against the config file's directory at load time, so the canonical config
embedded in a run manifest replays from anywhere.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .hmc import SamplerConfig
from .ingest import SvxCoeffs, SynthSpec, TempSpec
from .predictive import PpdMode, VolMode

_SAMPLER_KEYS = {
    "chains": "n_chains",
    "warmup": "warmup",
    "draws": "draws",
    "leapfrog_steps": "leapfrog_steps",
    "target_accept": "target_accept",
    "step_jitter": "step_jitter",
    "max_workers": "max_workers",
}


def _resolve_paths(node, base: Path):
    """Make every *.csv/.json-looking string under data/fit keys absolute."""
    if isinstance(node, dict):
        return {k: _resolve_paths(v, base) for k, v in node.items()}
    if isinstance(node, str):
        p = Path(node)
        return str(p if p.is_absolute() else (base / p).resolve())
    return node


@dataclass
class RunConfig:
    raw: dict

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            raw = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "RunConfig":
        raw = dict(raw)
        base = Path(base_dir) if base_dir is not None else Path.cwd()
        if "data" in raw:
            raw["data"] = _normalize_data(raw["data"], base)
        if raw.get("output_dir"):
            out = Path(raw["output_dir"])
            raw["output_dir"] = str(out if out.is_absolute()
                                    else (base / out).resolve())
        diag = raw.get("diagnose") or {}
        if diag.get("fit"):
            diag = dict(diag)
            diag["fit"] = _resolve_paths(diag["fit"], base)
            raw["diagnose"] = diag
        cfg = cls(raw)
        cfg._validate_common()
        return cfg

    # -- generic access -----------------------------------------------------

    def get(self, *keys, default=None):
        node = self.raw
        for k in keys:
            if not isinstance(node, dict) or k not in node:
                return default
            node = node[k]
        return node

    def require(self, *keys):
        node = self.get(*keys, default=_MISSING)
        if node is _MISSING:
            raise ConfigError(f"config key {'.'.join(keys)!r} is required")
        return node

    def _validate_common(self):
        seed = self.get("seed", default=_MISSING)
        if seed is _MISSING or not isinstance(seed, int):
            raise ConfigError("config must declare an integer 'seed'")
        hour = self.get("hour", default=14)
        if not isinstance(hour, int) or not 0 <= hour <= 23:
            raise ConfigError(f"hour must be an integer in [0, 23], got {hour!r}")
        zone = self.get("zone", default=1)
        if zone not in (1, 2):
            raise ConfigError(f"zone must be 1 or 2, got {zone!r}")
        model = self.get("model", default="baseline")
        if model not in ("baseline", "svx"):
            raise ConfigError(f"model must be 'baseline' or 'svx', got {model!r}")

    # -- typed accessors ----------------------------------------------------

    @property
    def seed(self) -> int:
        return self.require("seed")

    @property
    def output_dir(self) -> Path:
        return Path(self.require("output_dir"))

    @property
    def hour(self) -> int:
        return self.get("hour", default=14)

    @property
    def zone(self) -> int:
        return self.get("zone", default=1)

    @property
    def model(self) -> str:
        return self.get("model", default="baseline")

    def data_path(self, kind: str, zone: int) -> Path:
        table = self.get("data", kind)
        if not table:
            raise ConfigError(f"config key data.{kind} is required")
        path = table.get(str(zone))
        if path is None:
            raise ConfigError(f"no data.{kind} entry for zone {zone}")
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"data.{kind} path {p} does not exist")
        return p

    def sampler_config(self) -> SamplerConfig:
        section = self.get("sampler", default={}) or {}
        kwargs = {}
        for key, attr in _SAMPLER_KEYS.items():
            if key in section and section[key] is not None:
                kwargs[attr] = section[key]
        return SamplerConfig(**kwargs)

    def forecast_settings(self) -> dict:
        section = self.get("forecast", default={}) or {}
        return {
            "horizon": int(section.get("horizon", 7)),
            "n_draws": int(section.get("n_draws", 1000)),
            "mode": PpdMode(section.get("mode", "point")),
            "vol_mode": VolMode(section.get("vol_mode", "propagate")),
        }

    def synth_spec(self) -> SynthSpec:
        section = self.require("synth")
        svx = section.get("svx")
        temp = section.get("temp") or {}
        return SynthSpec(
            mu=float(section["mu"]),
            phi=float(section["phi"]),
            sigma=float(section["sigma"]),
            n_days=int(section["n_days"]),
            mean_price=float(section["mean_price"]),
            seed=self.seed,
            start_date=str(section.get("start_date", "2020-01-01")),
            hour=int(section.get("hour", self.hour)),
            zone=int(section.get("zone", self.zone)),
            hourly_amp_price=float(section.get("hourly_amp_price", 0.0)),
            hourly_amp_temp=float(section.get("hourly_amp_temp", 0.0)),
            svx=SvxCoeffs(**svx) if svx else None,
            temp=TempSpec(**temp),
        )

    # -- canonical form -----------------------------------------------------

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _normalize_data(data, base: Path) -> dict:
    if not isinstance(data, dict):
        raise ConfigError("config key 'data' must be a mapping")
    out = {}
    for kind, table in data.items():
        if isinstance(table, str):
            table = {1: table}
        if not isinstance(table, dict):
            raise ConfigError(f"data.{kind} must be a path or zone->path mapping")
        norm = {}
        for zone, path in table.items():
            try:
                z = int(zone)
            except (TypeError, ValueError):
                raise ConfigError(f"data.{kind} zone key {zone!r} is not an integer")
            norm[str(z)] = _resolve_paths(path, base)
        out[kind] = norm
    return out


_MISSING = object()
