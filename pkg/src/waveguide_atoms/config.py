"""Run configuration: YAML documents with flat dotted keys.

Nested mappings are accepted and flattened, so ``delta: {min: -4}`` and
``delta.min: -4`` mean the same thing. Every problem in a document is
collected before a :class:`~waveguide_atoms.errors.ConfigError` is raised.
Lengths are in wavelengths, rates in ``gamma_w``, times in ``1/gamma_w``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import yaml

from .errors import ConfigError

KINDS = ("spectrum", "eigen", "evolve", "storage", "ensemble", "analytic", "figure")
MODELS = ("fixed", "gauss", "uniform")
INITIAL_STATES = ("zero", "uniform", "alternating")

FIGURE_KINDS = {
    "1a": "eigen",
    "1b": "eigen",
    "1c": "spectrum",
    "2a": "eigen",
    "2b": "eigen",
    "2c": "eigen",
    "2d": "spectrum",
    "3": "spectrum",
    "4a": "spectrum",
    "4b": "spectrum",
    "5a": "storage",
    "5b": "storage",
    "6a": "ensemble",
    "6b": "ensemble",
    "7a": "ensemble",
    "7b": "ensemble",
}


@dataclass
class RunConfig:
    kind: str = "spectrum"
    n_atoms: int = 2
    spacing: float = 0.5
    origin: float = 0.0
    gamma_ratio: float = 1.0
    positions: list[float] | None = None
    detunings: list[float] | None = None
    drive: float = 1.0
    delta_min: float = -5.0
    delta_max: float = 5.0
    delta_steps: int = 1000
    seed: int = 0
    threads: int = 1
    out: str = "."
    plot: bool = True
    figure: str | None = None
    eigen_param_min: float = 0.01
    eigen_param_max: float = 1.0
    eigen_steps: int = 100
    evolve_t_end: float = 10.0
    evolve_tol: float = 1e-10
    evolve_samples: int = 201
    evolve_initial: str = "zero"
    storage_switch_time: float = 6.0
    storage_ramp: float = 0.2
    storage_horizon: float | None = None
    storage_detunings: list[float] | None = None
    storage_samples: int = 801
    ensemble_model: str = "fixed"
    ensemble_rms: float | None = None
    ensemble_depth: float | None = None
    ensemble_interval: float = 2.0
    ensemble_realizations: int = 100
    extra: dict[str, Any] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            if f.name == "extra":
                continue
            out[_KEY_OF_FIELD[f.name]] = getattr(self, f.name)
        return out


# config key -> (field, type)
_SCHEMA: dict[str, tuple[str, str]] = {
    "kind": ("kind", "str"),
    "experiment": ("kind", "str"),
    "n_atoms": ("n_atoms", "int"),
    "spacing": ("spacing", "float"),
    "origin": ("origin", "float"),
    "gamma_ratio": ("gamma_ratio", "float"),
    "positions": ("positions", "floats"),
    "detunings": ("detunings", "floats"),
    "drive": ("drive", "float"),
    "delta.min": ("delta_min", "float"),
    "delta.max": ("delta_max", "float"),
    "delta.steps": ("delta_steps", "int"),
    "seed": ("seed", "int"),
    "threads": ("threads", "int"),
    "out": ("out", "str"),
    "plot": ("plot", "bool"),
    "figure": ("figure", "str"),
    "eigen.param_min": ("eigen_param_min", "float"),
    "eigen.param_max": ("eigen_param_max", "float"),
    "eigen.steps": ("eigen_steps", "int"),
    "evolve.t_end": ("evolve_t_end", "float"),
    "evolve.tol": ("evolve_tol", "float"),
    "evolve.samples": ("evolve_samples", "int"),
    "evolve.initial": ("evolve_initial", "str"),
    "storage.switch_time": ("storage_switch_time", "float"),
    "storage.ramp": ("storage_ramp", "float"),
    "storage.horizon": ("storage_horizon", "float"),
    "storage.detunings": ("storage_detunings", "floats"),
    "storage.samples": ("storage_samples", "int"),
    "ensemble.model": ("ensemble_model", "str"),
    "ensemble.rms": ("ensemble_rms", "float"),
    "ensemble.depth": ("ensemble_depth", "float"),
    "ensemble.interval": ("ensemble_interval", "float"),
    "ensemble.realizations": ("ensemble_realizations", "int"),
}

_KEY_OF_FIELD = {fname: key for key, (fname, _) in _SCHEMA.items() if key != "experiment"}


def _flatten(doc: dict, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in doc.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def _coerce(key: str, value, kind: str, errors: list[str]):
    if value is None:
        return None
    if kind == "str":
        if isinstance(value, (str, int)) and not isinstance(value, bool):
            return str(value)
    elif kind == "int":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif kind == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif kind == "bool":
        if isinstance(value, bool):
            return value
    elif kind == "floats":
        if isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return [float(v) for v in value]
    errors.append(f"{key}: expected {kind}, got {type(value).__name__} {value!r}")
    return None


def validate(cfg: RunConfig) -> list[str]:
    """Return every constraint violation as ``key: message``."""
    errs = []

    def need(cond, key, msg):
        if not cond:
            errs.append(f"{key}: {msg}")

    need(cfg.kind in KINDS, "kind", f"must be one of {', '.join(KINDS)}")
    if cfg.figure is not None:
        need(cfg.figure in FIGURE_KINDS, "figure", f"unknown figure id {cfg.figure!r}")
    need(cfg.n_atoms >= 1, "n_atoms", "must be at least 1")
    need(math.isfinite(cfg.spacing) and cfg.spacing > 0, "spacing", "must be positive")
    need(math.isfinite(cfg.origin), "origin", "must be finite")
    need(math.isfinite(cfg.gamma_ratio) and cfg.gamma_ratio > 0, "gamma_ratio", "must be positive")
    need(not cfg.gamma_ratio > 1, "gamma_ratio", "gamma_w must not exceed gamma_t")
    if cfg.positions is not None:
        need(len(cfg.positions) >= 1, "positions", "must not be empty")
        need(all(math.isfinite(x) for x in cfg.positions), "positions", "must be finite")
    n = len(cfg.positions) if cfg.positions is not None else cfg.n_atoms
    if cfg.detunings is not None:
        need(len(cfg.detunings) in (1, n), "detunings", f"need 1 or {n} values, got {len(cfg.detunings)}")
        need(all(math.isfinite(x) for x in cfg.detunings), "detunings", "must be finite")
    need(math.isfinite(cfg.drive), "drive", "must be finite")
    need(cfg.delta_steps >= 1, "delta.steps", "must be at least 1")
    need(math.isfinite(cfg.delta_min) and math.isfinite(cfg.delta_max), "delta.min", "grid bounds must be finite")
    if cfg.delta_steps > 1:
        need(cfg.delta_max > cfg.delta_min, "delta.max", "must exceed delta.min")
    need(0 <= cfg.seed < 2**64, "seed", "must be an unsigned 64-bit integer")
    need(cfg.threads >= 1, "threads", "must be at least 1")
    need(cfg.eigen_steps >= 1, "eigen.steps", "must be at least 1")
    need(cfg.eigen_param_min > 0, "eigen.param_min", "must be positive")
    if cfg.eigen_steps > 1:
        need(cfg.eigen_param_max > cfg.eigen_param_min, "eigen.param_max", "must exceed eigen.param_min")
    need(cfg.evolve_t_end > 0, "evolve.t_end", "must be positive")
    need(cfg.evolve_tol > 0, "evolve.tol", "must be positive")
    need(cfg.evolve_samples >= 2, "evolve.samples", "must be at least 2")
    need(cfg.evolve_initial in INITIAL_STATES, "evolve.initial", f"must be one of {', '.join(INITIAL_STATES)}")
    need(cfg.storage_switch_time > 0, "storage.switch_time", "must be positive")
    need(cfg.storage_ramp >= 0, "storage.ramp", "must be non-negative")
    if cfg.storage_horizon is not None:
        need(
            cfg.storage_horizon > cfg.storage_switch_time + cfg.storage_ramp,
            "storage.horizon",
            "must exceed switch_time + ramp",
        )
    if cfg.storage_detunings is not None:
        need(len(cfg.storage_detunings) == cfg.n_atoms, "storage.detunings", f"need {cfg.n_atoms} values")
        need(all(x != 0 for x in cfg.storage_detunings), "storage.detunings", "must all be nonzero")
    need(cfg.storage_samples >= 2, "storage.samples", "must be at least 2")
    need(cfg.ensemble_model in MODELS, "ensemble.model", f"must be one of {', '.join(MODELS)}")
    if cfg.ensemble_rms is not None:
        need(cfg.ensemble_rms >= 0, "ensemble.rms", "must be non-negative")
    if cfg.ensemble_depth is not None:
        need(cfg.ensemble_depth > 0, "ensemble.depth", "must be positive")
    if cfg.ensemble_rms is not None and cfg.ensemble_depth is not None:
        errs.append("ensemble.depth: give either ensemble.rms or ensemble.depth, not both")
    if cfg.kind == "ensemble" and cfg.figure is None and cfg.ensemble_model == "gauss":
        need(
            cfg.ensemble_rms is not None or cfg.ensemble_depth is not None,
            "ensemble.rms",
            "gauss model needs ensemble.rms or ensemble.depth",
        )
    need(cfg.ensemble_interval > 0, "ensemble.interval", "must be positive")
    need(cfg.ensemble_realizations >= 1, "ensemble.realizations", "must be at least 1")
    return errs


def _fill_storage_defaults(cfg: RunConfig, explicit: set[str]) -> None:
    # the protocol lives on a four-atom one-wavelength lattice unless told otherwise
    if "n_atoms" not in explicit:
        cfg.n_atoms = 4
    if "spacing" not in explicit:
        cfg.spacing = 1.0
    if cfg.storage_detunings is None and cfg.n_atoms >= 2:
        cfg.storage_detunings = [2.0 / (cfg.n_atoms - 1)] + [-2.0] * (cfg.n_atoms - 1)
    if cfg.storage_horizon is None:
        cfg.storage_horizon = cfg.storage_switch_time + cfg.storage_ramp + 10.0


def from_mapping(doc: dict[str, Any], base: RunConfig | None = None) -> RunConfig:
    """Build and validate a config from a (possibly nested) mapping.

    Raises
    ------
    ConfigError
        Listing every unknown key, type mismatch and constraint violation.
    """
    errors: list[str] = []
    values: dict[str, Any] = {}
    for key, value in _flatten(doc).items():
        if key not in _SCHEMA:
            errors.append(f"{key}: unknown key")
            continue
        fname, kind = _SCHEMA[key]
        coerced = _coerce(key, value, kind, errors)
        if coerced is not None or value is None:
            values[fname] = coerced
    base = base or RunConfig()
    explicit = set(base.extra.get("explicit", ())) | set(values)
    cfg = dataclasses.replace(base, **values)
    cfg.extra = {"explicit": sorted(explicit)}
    if cfg.figure is not None:
        if cfg.figure in FIGURE_KINDS:
            cfg.kind = FIGURE_KINDS[cfg.figure]
            if cfg.kind == "storage":
                # the storage presets are fixed; record them in the resolved config
                cfg.n_atoms, cfg.spacing, cfg.gamma_ratio, cfg.drive = 4, 1.0, 1.0, 1.0
                cfg.storage_switch_time, cfg.storage_ramp = 6.0, 0.2
                cfg.storage_horizon, cfg.storage_detunings = None, None
    elif cfg.kind == "figure":
        errors.append("figure: kind 'figure' needs a figure id")
    if cfg.kind == "storage":
        _fill_storage_defaults(cfg, explicit)
    errors += validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse a YAML document into a validated :class:`RunConfig`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"<document>: not valid YAML ({exc})"]) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(["<document>: top level must be a mapping"])
    return from_mapping(doc, base)
