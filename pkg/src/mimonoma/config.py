"""Run-config files, presets and run manifests.

Config files are YAML documents::

    array:
      antennas: 50
      radius_wavelengths: 3.98   # optional; default gives half-wavelength spacing
      quadrature_points: 2048    # optional
      eig_threshold: 1.0e-6      # optional, relative to the largest eigenvalue
    clusters:
      - {azimuth_deg: 0, spread_deg: 30}
      - {azimuth_deg: 90, spread_deg: 30}
    users:
      antennas: 2                # N
      groups: 2                  # Q
      power: [0.625, 0.25, 0.125]
      rates: [0.5, 0.5, 3.0]     # bits per channel use
    sweep:
      rho_db: {start: 0, stop: 30, step: 2}   # or an explicit list
      trials: 100000
      seed: 0
    protocols: [perfect, oma]    # any of perfect, onebit, oma
    onebit: {tau: 0.5, mode: scaled}

A manifest written by a run holds the resolved document under ``config``
and is itself accepted by :func:`parse_config`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .geometry import half_wavelength_radius
from .simulator import ConfigError, RunConfig

__all__ = [
    "SweepSpec",
    "PRESETS",
    "preset",
    "parse_config",
    "config_from_dict",
    "config_to_dict",
    "load_manifest_config",
]


@dataclass(frozen=True)
class SweepSpec:
    rho_db: tuple
    protocols: tuple
    trials: int
    seed: int
    out: str | None = None

    @classmethod
    def from_config(cls, cfg: RunConfig, out=None) -> "SweepSpec":
        return cls(cfg.rho_db, cfg.protocols, cfg.trials, cfg.seed, out)


def _full_scale(**users) -> dict:
    return {
        "array": {"antennas": 50, "eig_threshold": 1e-6, "quadrature_points": 2048},
        "clusters": [{"azimuth_deg": az, "spread_deg": 30.0} for az in (0.0, 90.0, 180.0, 270.0)],
        "users": {"antennas": 2, "groups": 2, **users},
    }


PRESETS = {
    "fig1": {
        **_full_scale(power=[5 / 8, 2 / 8, 1 / 8], rates=[0.5, 0.5, 3.0]),
        "sweep": {"rho_db": {"start": 0, "stop": 30, "step": 2}, "trials": 100000, "seed": 0},
        "protocols": ["perfect", "oma"],
    },
    "fig2": {
        **_full_scale(power=[5 / 8, 2 / 8, 1 / 8], rates=[0.5, 0.5, 3.0]),
        "sweep": {"rho_db": {"start": 0, "stop": 40, "step": 2}, "trials": 100000, "seed": 0},
        "protocols": ["perfect"],
    },
    "fig3": {
        **_full_scale(power=[3 / 4, 1 / 4], rates=[0.5, 0.5]),
        "sweep": {"rho_db": {"start": 0, "stop": 30, "step": 2}, "trials": 100000, "seed": 0},
        "protocols": ["perfect", "onebit"],
        "onebit": {"tau": 0.5, "mode": "scaled"},
    },
}


def preset(name: str) -> RunConfig:
    try:
        doc = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return config_from_dict(doc)


def _section(doc: dict, name: str, required=True) -> dict:
    value = doc.get(name)
    if value is None:
        if required:
            raise ConfigError(f"missing section '{name}'")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return value


def _require(section: dict, key: str, where: str):
    if key not in section or section[key] is None:
        raise ConfigError(f"missing '{where}.{key}'")
    return section[key]


def _rho_grid(spec) -> tuple:
    if isinstance(spec, dict):
        start = float(_require(spec, "start", "sweep.rho_db"))
        stop = float(_require(spec, "stop", "sweep.rho_db"))
        step = float(_require(spec, "step", "sweep.rho_db"))
        if step <= 0 or stop < start:
            raise ConfigError("sweep.rho_db needs step > 0 and stop >= start")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + i * step) for i in range(n))
    if isinstance(spec, (list, tuple)):
        return tuple(float(x) for x in spec)
    if isinstance(spec, (int, float)):
        return (float(spec),)
    raise ConfigError("sweep.rho_db must be a list or a {start, stop, step} mapping")


def config_from_dict(doc: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig` from a parsed document."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    array = _section(doc, "array")
    users = _section(doc, "users")
    sweep = _section(doc, "sweep")
    onebit = _section(doc, "onebit", required=False)
    clusters = doc.get("clusters")
    if not clusters or not isinstance(clusters, list):
        raise ConfigError("'clusters' must be a nonempty list")

    M = int(_require(array, "antennas", "array"))
    radius = array.get("radius_wavelengths")
    if radius is None or radius == "half-wavelength":
        radius = half_wavelength_radius(M)
    protocols = doc.get("protocols", ["perfect"])
    if isinstance(protocols, str):
        protocols = [protocols]
    try:
        cfg = RunConfig(
            antennas=M,
            radius_wavelengths=float(radius),
            clusters=tuple(
                (float(_require(c, "azimuth_deg", "clusters[]")), float(_require(c, "spread_deg", "clusters[]")))
                for c in clusters
            ),
            user_antennas=int(_require(users, "antennas", "users")),
            groups=int(users.get("groups", 1)),
            power=tuple(_require(users, "power", "users")),
            rates=tuple(_require(users, "rates", "users")),
            rho_db=_rho_grid(_require(sweep, "rho_db", "sweep")),
            trials=int(_require(sweep, "trials", "sweep")),
            seed=int(sweep.get("seed", 0)),
            protocols=tuple(protocols),
            onebit_tau=float(onebit.get("tau", 1.0)),
            onebit_tau_mode=str(onebit.get("mode", "fixed")),
            quadrature_points=int(array.get("quadrature_points", 2048)),
            eig_threshold=float(array.get("eig_threshold", 1e-6)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed config value: {exc}") from None
    cfg.validate()
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    """Fully resolved document; ``config_from_dict`` inverts it exactly."""
    return {
        "array": {
            "antennas": cfg.antennas,
            "radius_wavelengths": cfg.radius_wavelengths,
            "quadrature_points": cfg.quadrature_points,
            "eig_threshold": cfg.eig_threshold,
        },
        "clusters": [{"azimuth_deg": a, "spread_deg": s} for a, s in cfg.clusters],
        "users": {
            "antennas": cfg.user_antennas,
            "groups": cfg.groups,
            "power": list(cfg.power),
            "rates": list(cfg.rates),
        },
        "sweep": {"rho_db": list(cfg.rho_db), "trials": cfg.trials, "seed": cfg.seed},
        "protocols": list(cfg.protocols),
        "onebit": {"tau": cfg.onebit_tau, "mode": cfg.onebit_tau_mode},
    }


def parse_config(path) -> tuple[RunConfig, SweepSpec]:
    """Read a YAML config (or a run manifest) and validate it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if isinstance(doc, dict) and "config" in doc and "array" not in doc:
        doc = doc["config"]
    cfg = config_from_dict(doc)
    return cfg, SweepSpec.from_config(cfg)


def load_manifest_config(path) -> RunConfig:
    return parse_config(path)[0]


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    new = dataclasses.replace(cfg, **changes)
    new.validate()
    return new
