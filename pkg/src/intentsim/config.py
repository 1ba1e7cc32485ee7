"""Configuration bundles for the navigation stack, synthetic perception, the
intention agents and the person behaviour model, plus YAML loading with dotted
key overrides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml


@dataclass(frozen=True)
class NavConfig:
    resolution_m: float = 0.05
    margin_m: float = 0.05
    lookahead_m: float = 0.3


@dataclass(frozen=True)
class PerceptionConfig:
    sensor_range_m: float = 10.0
    pos_sigma_m: float = 0.0
    size_inflation_sigma: float = 0.0
    timeout_s: float = 1.0


@dataclass(frozen=True)
class AtmConfig:
    """Free parameters of the intention-guessing and action-selection agents."""

    gaze_min_deg: float = 10.0
    gaze_max_deg: float = 50.0
    gaze_samples: int = 5
    admissibility_margin_s: float = 0.5
    max_people: int = 3
    search_order: str = "collision_distance"
    guess_period_s: float = 0.5

    def __post_init__(self) -> None:
        if self.gaze_min_deg >= self.gaze_max_deg:
            raise ValueError("gaze_min_deg must be < gaze_max_deg")
        if self.gaze_samples < 1:
            raise ValueError("gaze_samples must be >= 1")

    def gaze_values(self) -> list[float]:
        """Evenly spaced gaze samples in radians, inclusive of both endpoints."""
        lo, hi = math.radians(self.gaze_min_deg), math.radians(self.gaze_max_deg)
        if self.gaze_samples == 1:
            return [lo]
        step = (hi - lo) / (self.gaze_samples - 1)
        return [lo + k * step for k in range(self.gaze_samples)]


@dataclass(frozen=True)
class PersonConfig:
    """Canonical person model used when simulating people internally.

    gaze_deg doubles as the fallback true gaze of scripted people and the fixed
    gaze of the human-steered avatar. margin_m is the personal clearance people
    keep from obstacles when planning, on top of their body radius.
    """

    gaze_deg: float = 20.0
    margin_m: float = 0.25
    eye_height_m: float = 1.6
    half_angle_deg: float = 60.0
    range_m: float = 7.0
    speed_mps: float = 0.5
    accel_limit: float = 10.0
    replan_move_eps_m: float = 0.10


@dataclass(frozen=True)
class WorldConfig:
    dt: float = 0.05
    episode_timeout_s: float = 40.0
    sim_horizon_s: float = 60.0
    standoff_gap_m: float = 0.1


@dataclass(frozen=True)
class Config:
    nav: NavConfig = field(default_factory=NavConfig)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    atm: AtmConfig = field(default_factory=AtmConfig)
    person: PersonConfig = field(default_factory=PersonConfig)
    world: WorldConfig = field(default_factory=WorldConfig)


_SECTIONS = {"nav": NavConfig, "perception": PerceptionConfig, "atm": AtmConfig,
             "person": PersonConfig, "world": WorldConfig}


def apply_overrides(cfg: Config, overrides: dict[str, object]) -> Config:
    """Apply {"atm.gaze_samples": 3, ...} style dotted overrides."""
    staged: dict[str, dict[str, object]] = {}
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if section not in _SECTIONS or not key:
            raise KeyError(f"unknown config key {dotted!r}")
        valid = {f.name for f in fields(_SECTIONS[section])}
        if key not in valid:
            raise KeyError(f"unknown config key {dotted!r}")
        staged.setdefault(section, {})[key] = value
    updated = {section: replace(getattr(cfg, section), **kv) for section, kv in staged.items()}
    return replace(cfg, **updated)


def load_config(path: str | Path, base: Config | None = None) -> Config:
    """Load a YAML config file of {section: {key: value}} mappings."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    overrides: dict[str, object] = {}
    for section, kv in raw.items():
        if not isinstance(kv, dict):
            raise ValueError(f"config section {section!r} must be a mapping")
        for key, value in kv.items():
            overrides[f"{section}.{key}"] = value
    return apply_overrides(base or Config(), overrides)
