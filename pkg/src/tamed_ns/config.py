"""Key-value configuration files and their validated form.

A config file holds one ``dotted.key = value`` per line; ``#`` starts a comment.
Values are JSON literals (numbers, true/false, lists) or bare strings:

    grid.size = 32
    physics.nu = 1.0
    taming.N = 4
    scenario.name = taylor_green
    forcing.modes = [[0, 1, 0, 0, 0.0, -1.0]]   # kx ky kz component re im
    experiment.N_list = [1, 2, 4, 8]

Flag overrides (``--set key=value``) are applied after the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import ConfigurationError

OUTPUT_ROOT_ENV = "TAMED_NS_OUTPUT_ROOT"

EXPERIMENT_KINDS = ("single", "sweep_taming", "sweep_resolution", "compare")
SCENARIO_NAMES = ("taylor_green", "shear_mode", "random_spectrum")

# dotted key -> SimConfig attribute
KEYS = {
    "grid.size": "grid_size",
    "physics.nu": "nu",
    "taming.enabled": "taming_enabled",
    "taming.N": "N",
    "time.t_end": "t_end",
    "time.cfl": "cfl",
    "time.dt_max": "dt_max",
    "time.dt_min": "dt_min",
    "time.sample_interval": "sample_interval",
    "scenario.name": "scenario_name",
    "scenario.amplitude": "scenario_amplitude",
    "scenario.k0": "scenario_k0",
    "scenario.seed": "scenario_seed",
    "forcing.kind": "forcing_kind",
    "forcing.amplitude": "forcing_amplitude",
    "forcing.modes": "forcing_modes",
    "forcing.omega": "forcing_omega",
    "output.dir": "output_dir",
    "output.checkpoint_stride": "checkpoint_stride",
    "experiment.kind": "experiment_kind",
    "experiment.N_list": "N_list",
    "experiment.M_list": "M_list",
    "experiment.workers": "workers",
    "experiment.reference": "reference",
}


@dataclass(frozen=True)
class SimConfig:
    grid_size: int = 32
    nu: float = 1.0
    taming_enabled: bool = True
    N: float = 10.0
    t_end: float = 1.0
    cfl: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-8
    sample_interval: float = 1e-2
    scenario_name: str = "taylor_green"
    scenario_amplitude: float = 1.0
    scenario_k0: int = 2
    scenario_seed: int = 0
    forcing_kind: str = "zero"
    forcing_amplitude: float = 0.0
    forcing_modes: tuple = ()
    forcing_omega: float = 1.0
    output_dir: str = "output"
    checkpoint_stride: int = 0
    experiment_kind: str = "single"
    N_list: tuple = ()
    M_list: tuple = ()
    workers: int = 1
    reference: bool = True

    # -- derived objects ------------------------------------------------------

    def taming_profile(self):
        from .taming import TamingProfile

        if not self.taming_enabled:
            return TamingProfile.disabled(self.nu)
        return TamingProfile(N=float(self.N), nu=float(self.nu))

    def step_policy(self):
        from .integrator import StepPolicy

        return StepPolicy(self.cfl, self.dt_max, self.dt_min, self.sample_interval)

    def scenario(self):
        from .scenarios import Scenario

        return Scenario(
            self.scenario_name, self.scenario_amplitude, self.scenario_k0, self.scenario_seed
        )

    def scenario_key(self) -> str:
        """Identifies everything but the taming level, for sweep consistency checks."""
        return (
            f"{self.scenario_name}:a={self.scenario_amplitude!r}:k0={self.scenario_k0}:"
            f"seed={self.scenario_seed}:M={self.grid_size}:nu={self.nu!r}:T={self.t_end!r}:"
            f"f={self.forcing_kind}/{self.forcing_amplitude!r}/{list(self.forcing_modes)}"
            f"/{self.forcing_omega!r}"
        )

    def with_overrides(self, **kw) -> "SimConfig":
        return validate(replace(self, **kw))

    def to_dict(self) -> dict:
        return {key: _jsonable(getattr(self, attr)) for key, attr in KEYS.items()}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip("'\"")


def parse_pairs(lines: Iterable[str], source="<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigurationError(f"unknown configuration key ({source}:{lineno})", key=key)
        out[key] = _parse_value(value)
    return out


def _coerce(key, attr, value):
    default = getattr(SimConfig, attr)
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, str):
            return str(value)
        if isinstance(default, tuple):
            if not isinstance(value, list):
                raise TypeError
            return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"invalid value {value!r}", key=key) from None
    return value


def validate(cfg: SimConfig) -> SimConfig:
    def need(cond, key, msg):
        if not cond:
            raise ConfigurationError(msg, key=key)

    need(cfg.grid_size >= 8 and cfg.grid_size % 2 == 0, "grid.size", "must be even and >= 8")
    need(cfg.nu > 0, "physics.nu", "must be positive")
    need(cfg.N >= 0, "taming.N", "must be >= 0")
    need(cfg.t_end >= 0, "time.t_end", "must be >= 0")
    need(0 < cfg.cfl <= 1, "time.cfl", "must lie in (0, 1]")
    need(cfg.dt_max > 0, "time.dt_max", "must be positive")
    need(0 < cfg.dt_min <= cfg.dt_max, "time.dt_min", "must lie in (0, dt_max]")
    need(cfg.sample_interval > 0, "time.sample_interval", "must be positive")
    need(cfg.scenario_name in SCENARIO_NAMES, "scenario.name", f"must be one of {SCENARIO_NAMES}")
    need(cfg.scenario_k0 > 0, "scenario.k0", "must be a positive integer")
    need(cfg.forcing_omega > 0, "forcing.omega", "must be positive")
    need(cfg.checkpoint_stride >= 0, "output.checkpoint_stride", "must be >= 0")
    need(cfg.workers >= 1, "experiment.workers", "must be >= 1")
    need(cfg.experiment_kind in EXPERIMENT_KINDS, "experiment.kind", f"must be one of {EXPERIMENT_KINDS}")
    for m in cfg.forcing_modes:
        need(
            isinstance(m, tuple) and len(m) == 6,
            "forcing.modes",
            "each mode must be [kx, ky, kz, component, re, im]",
        )
    need(all(n > 0 for n in cfg.N_list), "experiment.N_list", "entries must be positive")
    need(
        all(a < b for a, b in zip(cfg.N_list, cfg.N_list[1:])),
        "experiment.N_list",
        "must be strictly increasing",
    )
    need(
        all(m >= 8 and m % 2 == 0 for m in cfg.M_list),
        "experiment.M_list",
        "entries must be even and >= 8",
    )
    need(
        all(a < b for a, b in zip(cfg.M_list, cfg.M_list[1:])),
        "experiment.M_list",
        "must be strictly increasing",
    )
    if cfg.experiment_kind == "sweep_taming":
        need(len(cfg.N_list) >= 1, "experiment.N_list", "required for sweep_taming")
    if cfg.experiment_kind == "sweep_resolution":
        need(len(cfg.M_list) >= 2, "experiment.M_list", "needs at least two grid sizes")
    return cfg


def from_mapping(values: Mapping[str, object], base: Optional[SimConfig] = None) -> SimConfig:
    kw = {}
    for key, value in values.items():
        if key not in KEYS:
            raise ConfigurationError("unknown configuration key", key=key)
        kw[KEYS[key]] = _coerce(key, KEYS[key], value)
    return validate(replace(base or SimConfig(), **kw))


def parse_config(path=None, overrides: Iterable[str] = (), env=None) -> SimConfig:
    """Read ``path`` (optional), then the output-root env var, then ``key=value`` overrides."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigurationError(f"config file not found: {p}")
        values.update(parse_pairs(p.read_text().splitlines(), source=str(p)))
    env = os.environ if env is None else env
    if env.get(OUTPUT_ROOT_ENV):
        values["output.dir"] = env[OUTPUT_ROOT_ENV]
    values.update(parse_pairs(overrides, source="--set"))
    return from_mapping(values)


def sweep_members(cfg: SimConfig) -> list[tuple[str, SimConfig]]:
    """(label, config) of every run a sweep or comparison consists of."""
    out = []
    if cfg.experiment_kind == "sweep_taming":
        for n in cfg.N_list:
            out.append((f"N_{n:g}", replace(cfg, N=float(n), taming_enabled=True, experiment_kind="single")))
        if cfg.reference:
            out.append(("reference", replace(cfg, taming_enabled=False, experiment_kind="single")))
    elif cfg.experiment_kind == "sweep_resolution":
        for m in cfg.M_list:
            out.append((f"M_{m}", replace(cfg, grid_size=int(m), experiment_kind="single")))
    elif cfg.experiment_kind == "compare":
        out.append(("tamed", replace(cfg, taming_enabled=True, experiment_kind="single")))
        out.append(("untamed", replace(cfg, taming_enabled=False, experiment_kind="single")))
    else:
        out.append(("run", cfg))
    return out
