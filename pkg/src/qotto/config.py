"""YAML run configurations, validated against ``config_schema.json``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .cycle import CycleSpec
from .errors import ConfigError
from .oracle import BathParams

FIXTURES = ("optimal_linear", "analytic_short", "analytic_long", "analytic_infinite",
            "sweep_j1", "sweep_j2", "sweep_j2_slow", "phase_decay",
            "dephasing_short", "dephasing_short_gamma", "dephasing_long", "dephasing_long_gamma")


@lru_cache(maxsize=1)
def schema():
    return json.loads(resources.files("qotto").joinpath("config_schema.json").read_text())


@dataclass(frozen=True)
class RunConfig:
    spec: CycleSpec
    output_path: str | None = None
    output_format: str = "csv"
    figures: bool = True
    seed: int = 0
    simulate: dict = field(default_factory=dict)
    sweep: dict | None = None
    optimize: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    description: str = ""

    def sweep_grid(self):
        if self.sweep is None:
            raise ConfigError("config has no 'sweep' section")
        g = self.sweep["grid"]
        if isinstance(g, dict):
            return np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))
        return np.array([float(v) for v in g])


def _bath(d):
    return BathParams(float(d["temperature"]), float(d["Gamma"]), float(d.get("gamma", 0.0)))


def _opt_float(v):
    return None if v is None else float(v)


def spec_from_dict(e: dict) -> CycleSpec:
    return CycleSpec(
        omega_a=float(e["omega_a"]),
        omega_b=float(e["omega_b"]),
        j_coupling=float(e["j_coupling"]),
        hot_bath=_bath(e["hot"]),
        cold_bath=_bath(e["cold"]),
        tau_h=float(e["tau_h"]),
        tau_c=float(e["tau_c"]),
        tau_ba=_opt_float(e.get("tau_ba")),
        tau_ab=_opt_float(e.get("tau_ab")),
        schedule=e.get("schedule", "linear"),
        r=_opt_float(e.get("r")),
        samples_per_branch=int(e.get("samples_per_branch", 50)),
        adiabat_steps=e.get("adiabat_steps"),
    )


def parse_config(data) -> RunConfig:
    """Validate a mapping and build the run configuration; physics violations become ConfigError."""
    try:
        jsonschema.validate(data, schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {exc.message}") from None
    try:
        spec = spec_from_dict(data["engine"])
        spec.durations()
    except Exception as exc:  # noqa: BLE001 - any construction failure is a config problem
        raise ConfigError(f"engine: {exc}") from None
    out = data.get("output", {})
    return RunConfig(
        spec=spec,
        output_path=out.get("path"),
        output_format=out.get("format", "csv"),
        figures=out.get("figures", True),
        seed=int(data.get("seed", 0)),
        simulate=data.get("simulate", {}),
        sweep=data.get("sweep"),
        optimize=data.get("optimize", {}),
        validate=data.get("validate", {}),
        description=data.get("description", ""),
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def fixture_path(name) -> Path:
    """Path of a shipped fixture config, e.g. ``fixture_path('optimal_linear')``."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files("qotto").joinpath("fixtures").joinpath(f"{name}.yaml")))


def load_fixture(name) -> RunConfig:
    return load_config(fixture_path(name))
