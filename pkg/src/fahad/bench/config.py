"""Experiment configuration: a single JSON document checked against a published schema."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace

import jsonschema
import numpy as np

from ..errors import ConfigError

METHODS = ("fa-had-music", "jad-rd-music", "fd-2d-music", "fdfa", "sfa")
ENV_PREFIX = "FAHAD_"
DEFAULT_SEED = 0

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fahad experiment",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "methods": {"type": "array", "minItems": 1, "items": {"enum": list(METHODS)}},
        "n_elements": {"type": "integer", "minimum": 1},
        "element_spacing": {"type": "number", "exclusiveMinimum": 0},
        "n_positions": {"type": "integer", "minimum": 1},
        "n_phases": {"type": "integer", "minimum": 1},
        "n_sources": {"type": "integer", "minimum": 1},
        "n_pilots": {"type": "integer", "minimum": 1},
        "snr_db": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "trajectory": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step_min": {"type": "number", "exclusiveMinimum": 0},
                "step_max": {"type": "number", "exclusiveMinimum": 0},
                "axis": {"enum": ["x", "y", "both"]},
                "displacements": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                                             "items": {"type": "number"}}},
            },
        },
        "sources": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "angles_deg": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                                          "items": {"type": "number", "minimum": -90,
                                                                    "maximum": 90}}},
                "gain": {"enum": ["rayleigh", "unit"]},
                "theta_range_deg": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                "phi_range_deg": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "coarse_step": {"type": "number", "exclusiveMinimum": 0},
                "fine_step": {"type": "number", "exclusiveMinimum": 0},
                "window": {"type": "number", "exclusiveMinimum": 0},
                "limit": {"type": "number", "exclusiveMinimum": 0, "maximum": 90},
                "phi_coarse": {"type": "number", "exclusiveMinimum": 0},
                "phi_fine": {"type": "number", "exclusiveMinimum": 0},
                "phi_window": {"type": "number", "exclusiveMinimum": 0},
                "theta_step": {"type": "number", "exclusiveMinimum": 0},
                "fd_step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number"},
        "pinv_tol": {"type": "number", "exclusiveMinimum": 0},
        "fresh_frames": {"type": "boolean"},
        "out": {"type": "string"},
    },
}


@dataclass(frozen=True)
class GridConfig:
    coarse_step: float = 1.0
    fine_step: float = 0.05
    window: float = 1.5
    limit: float = 89.5
    phi_coarse: float = 0.2
    phi_fine: float = 0.02
    phi_window: float = 0.2
    theta_step: float = 0.05
    fd_step: float = 0.1


@dataclass(frozen=True)
class TrajectoryConfig:
    step_min: float = 0.15
    step_max: float = 0.45
    axis: str = "x"
    displacements: tuple | None = None


@dataclass(frozen=True)
class SourceConfig:
    """Random sources (uniform angles, Rayleigh gains) unless ``angles_deg`` fixes them."""

    angles_deg: tuple | None = None
    gain: str = "rayleigh"
    theta_range_deg: tuple = (-90.0, 90.0)
    phi_range_deg: tuple = (-90.0, 90.0)


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple = ("fa-had-music",)
    n_elements: int = 8
    element_spacing: float = 0.5
    n_positions: int = 24
    n_phases: int = 3
    n_sources: int = 6
    n_pilots: int = 100
    snr_db: tuple = (0.0,)
    trials: int = 100
    seed: int = DEFAULT_SEED
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    sources: SourceConfig = field(default_factory=SourceConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    eps: float = 1e-3
    alpha: float = float(np.pi / 8)
    pinv_tol: float = 1e-10
    fresh_frames: bool = False
    out: str = "results"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["snr_db"] = list(self.snr_db)
        traj = d["trajectory"]
        if traj["displacements"] is None:
            del traj["displacements"]
        else:
            traj["displacements"] = [list(p) for p in traj["displacements"]]
        src = d["sources"]
        if src["angles_deg"] is None:
            del src["angles_deg"]
        else:
            src["angles_deg"] = [list(p) for p in src["angles_deg"]]
        src["theta_range_deg"] = list(src["theta_range_deg"])
        src["phi_range_deg"] = list(src["phi_range_deg"])
        return d

    def with_updates(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def semantic_problems(cfg: ExperimentConfig) -> list[str]:
    """Cross-field checks the schema cannot express."""
    problems = []
    if "fa-had-music" in cfg.methods:
        if cfg.n_phases >= cfg.n_elements and cfg.n_elements > 1:
            problems.append(f"n_phases (T={cfg.n_phases}) must be < n_elements (N={cfg.n_elements}) for fa-had-music")
        if cfg.n_positions * cfg.n_phases <= cfg.n_sources:
            problems.append("n_positions * n_phases must exceed n_sources for fa-had-music")
    if cfg.n_elements * cfg.n_positions <= cfg.n_sources:
        problems.append("n_elements * n_positions must exceed n_sources")
    if cfg.n_pilots < cfg.n_sources:
        problems.append(f"n_pilots ({cfg.n_pilots}) must be >= n_sources ({cfg.n_sources})")
    traj = cfg.trajectory
    if traj.displacements is not None:
        if len(traj.displacements) != cfg.n_positions:
            problems.append("trajectory.displacements must list n_positions points")
        elif any(v != 0 for v in traj.displacements[0]):
            problems.append("trajectory.displacements must start at (0, 0)")
    elif not traj.step_min <= traj.step_max:
        problems.append("trajectory.step_min must not exceed trajectory.step_max")
    src = cfg.sources
    if src.angles_deg is not None and len(src.angles_deg) != cfg.n_sources:
        problems.append(f"sources.angles_deg lists {len(src.angles_deg)} pairs, n_sources is {cfg.n_sources}")
    for name in ("theta_range_deg", "phi_range_deg"):
        lo, hi = getattr(src, name)
        if not -90 <= lo <= hi <= 90:
            problems.append(f"sources.{name} must satisfy -90 <= lo <= hi <= 90")
    if abs(np.sin(2 * cfg.alpha)) < 1e-12:
        problems.append("alpha must not be a multiple of pi/2")
    return problems


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def from_dict(data: dict) -> ExperimentConfig:
    """Validate against the schema and the cross-field rules, reporting every problem at once.

    Raises:
        ConfigError: listing all violations.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
                for e in sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))]
    if problems:
        raise ConfigError(problems)
    kwargs = {k: _tupled(v) for k, v in data.items() if k not in ("trajectory", "sources", "grid")}
    nested = {
        "trajectory": TrajectoryConfig(**{k: _tupled(v) for k, v in data.get("trajectory", {}).items()}),
        "sources": SourceConfig(**{k: _tupled(v) for k, v in data.get("sources", {}).items()}),
        "grid": GridConfig(**data.get("grid", {})),
    }
    cfg = ExperimentConfig(**kwargs, **nested)
    problems = semantic_problems(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def env_override(name: str, default=None):
    """Value of ``FAHAD_<NAME>`` if set, else ``default``."""
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def field_names() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]
