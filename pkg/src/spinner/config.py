"""TOML scenario configuration with flat dotted-key overrides.

A configuration is a two-level mapping::

    [scenario]   name, duration, plate_width, seed, body_torque, initial_yaw_rate, metric_window
    [reference]  kind = "hover" | "lemniscate" | "waypoints" plus generator options
    [wind]       speed, t_on, direction, turbulence_std, turbulence_hz
    [noise]      position, velocity, attitude, rate
    [vehicle] [nmpc] [indi] [observer]   fields of the matching dataclasses

Unknown sections or keys raise :class:`ConfigError` naming the key.
"""
from __future__ import annotations

import copy
import dataclasses
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .indi import IndiConfig
from .nmpc import NmpcConfig
from .observer import ObserverConfig
from .sim import ControllerOptions, ReferenceSpec, Scenario, SensorNoise, WindProfile, gust_step_profile
from .vehicle import VehicleParams

_DATACLASS_SECTIONS = {
    "vehicle": VehicleParams,
    "nmpc": NmpcConfig,
    "indi": IndiConfig,
    "observer": ObserverConfig,
    "noise": SensorNoise,
}
_SCENARIO_KEYS = {"name", "duration", "plate_width", "seed", "body_torque", "initial_yaw_rate",
                  "initial_state", "metric_window"}
_REFERENCE_KEYS = {
    "hover": {"p_hold"},
    "lemniscate": {"extent_x", "extent_y", "extent_z", "v_max", "centre", "loops"},
    "waypoints": {"file", "segment_speed", "accel_ceiling"},
}
_WIND_KEYS = {"speed", "t_on", "direction", "turbulence_std", "turbulence_hz"}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


def _allowed(section: str, cfg: dict) -> set:
    if section in _DATACLASS_SECTIONS:
        return {f.name for f in dataclasses.fields(_DATACLASS_SECTIONS[section])}
    if section == "scenario":
        return _SCENARIO_KEYS
    if section == "wind":
        return _WIND_KEYS
    if section == "reference":
        kind = cfg.get("reference", {}).get("kind", "hover")
        if kind not in _REFERENCE_KEYS:
            raise ConfigError(f"unknown reference kind {kind!r}", "reference.kind")
        return {"kind"} | _REFERENCE_KEYS[kind]
    raise ConfigError(f"unknown config section {section!r}", section)


def validate(cfg: dict) -> dict:
    for section, values in cfg.items():
        if not isinstance(values, dict):
            raise ConfigError(f"top-level key {section!r} must be a table", section)
        allowed = _allowed(section, cfg)
        for key in values:
            if key not in allowed:
                raise ConfigError(f"unknown config key {section}.{key}", f"{section}.{key}")
    return cfg


def merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for section, values in extra.items():
        if isinstance(values, dict):
            out.setdefault(section, {}).update(values)
        else:
            out[section] = values
    return out


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_value(raw: str):
    """TOML literal if it parses as one (numbers, booleans, arrays), else the raw string."""
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(cfg: dict, overrides) -> dict:
    out = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value", item)
        key, raw = item.split("=", 1)
        key = key.strip()
        parts = key.split(".")
        if len(parts) != 2 or not all(parts):
            raise ConfigError(f"override key {key!r} must look like section.key", key)
        out.setdefault(parts[0], {})[parts[1]] = parse_value(raw.strip())
    return out


def _build(cls, values: dict, section: str):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}", section) from exc


def build_scenario(cfg: dict, default_name: str = "scenario") -> Scenario:
    validate(cfg)
    sc = dict(cfg.get("scenario", {}))
    vehicle = _build(VehicleParams, cfg.get("vehicle", {}), "vehicle")
    controller = ControllerOptions(
        nmpc=_build(NmpcConfig, cfg.get("nmpc", {}), "nmpc"),
        indi=_build(IndiConfig, cfg.get("indi", {}), "indi"),
        observer=_build(ObserverConfig, cfg.get("observer", {}), "observer"),
    )
    noise = _build(SensorNoise, cfg.get("noise", {}), "noise")

    ref = dict(cfg.get("reference", {}))
    kind = ref.pop("kind", "hover")
    loops = ref.pop("loops", None)
    spec = ReferenceSpec(kind, ref)
    try:
        generator = spec.build(vehicle)
    except (TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"[reference] {exc}", "reference") from exc

    if "duration" not in sc:
        if kind == "lemniscate":
            sc["duration"] = (2 if loops is None else loops) * generator.period
        elif kind == "waypoints":
            sc["duration"] = generator.duration + 5.0
        else:
            sc["duration"] = 10.0
    if kind == "lemniscate" and loops is not None and "metric_window" not in sc:
        sc["metric_window"] = (0.0, loops * generator.period)

    w = dict(cfg.get("wind", {}))
    try:
        if w.get("speed", 0.0) or w.get("turbulence_std", 0.0):
            base = gust_step_profile(float(w.get("speed", 0.0)), float(w.get("t_on", 0.0)),
                                     w.get("direction", (1.0, 0.0, 0.0)))
            wind = WindProfile(base.steps, float(w.get("turbulence_std", 0.0)), float(w.get("turbulence_hz", 1.0)))
        else:
            wind = WindProfile()
    except ValueError as exc:
        raise ConfigError(f"[wind] {exc}", "wind") from exc

    sc.setdefault("name", default_name)
    for key in ("body_torque", "initial_state", "metric_window"):
        if key in sc:
            sc[key] = tuple(sc[key])
    try:
        return Scenario(reference=spec, wind=wind, sensor_noise=noise, controller=controller,
                        vehicle=vehicle, **sc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[scenario] {exc}", "scenario") from exc
