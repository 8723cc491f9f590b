"""Scenario configuration: TOML parsing, defaults, validation, hashing.

An empty file (or no file) yields the baseline zinc melting scenario;
every key is optional and unknown keys are rejected by name.  The
``--set section.key=value`` override syntax of the CLI reuses the TOML
value grammar.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import ControllerConfig
from .errors import ParameterError
from .planner import PhysicalParams, SeriesPlanner
from .reference import ReferenceParams, ReferenceTrajectory
from .solver import SolverConfig

__all__ = ["ScenarioConfig", "parse_config", "apply_overrides", "config_hash", "DEFAULTS"]

DEFAULTS: dict = {
    "physical": {
        "conductivity": 116.0,        # W/(m K)
        "density": 6570.0,            # kg/m^3
        "specific_heat": 389.57,      # J/(kg K)
        "latent_heat": 111961.0,      # J/kg
        "relaxation_time": 10.0,      # s
        "melt_temp": 0.0,             # deg C
        "domain_length": 0.2,         # m
        # Optional direct overrides of the derived transport coefficients:
        # "diffusivity": ..., "stefan_coeff": ...
    },
    "reference": {
        "omega": 0.002,               # rad/s
        "delta1": 4.0e-4,             # 1/s
        "delta2": 4.0e-3,             # 1/s
        "v_min": 7.0e-7,              # m/s
        "s_start": 0.11,              # m
        "s_final": 0.15,              # m
    },
    "planner": {
        "order": 30,
        "gevrey_d": 2.0,
        "gevrey_m_max": 10,
    },
    "solver": {
        "n_grid": 200,
        "dt": 0.05,                   # s
        "theta": 1.0,
        # "s_floor": ...              # default: s0 / 2
    },
    "controller": {
        "gain": 0.002,                # 1/s
    },
    "run": {
        "horizon": 6000.0,            # s
        "log_every": 200,
        "s0": 0.1,                    # m
        "v0": 0.0,                    # m/s
        "t0_kind": "linear",          # "linear" or "uniform"
        "t0_surface": 10.0,           # deg C above melt at x = 0 (linear profile)
        "preflight_samples": 10000,
        "field_times": [3.0, 60.0, 600.0, 5940.0],  # s; always dumped when enabled
    },
}

_OPTIONAL_KEYS = {
    "physical": {"diffusivity", "stefan_coeff"},
    "solver": {"s_floor"},
}


def _merge(defaults: dict, user: dict) -> dict:
    out = {}
    for section, keys in defaults.items():
        out[section] = dict(keys)
    for section, keys in user.items():
        if section not in defaults:
            raise ParameterError(f"unknown config section [{section}]")
        if not isinstance(keys, dict):
            raise ParameterError(f"config section [{section}] must be a table")
        allowed = set(defaults[section]) | _OPTIONAL_KEYS.get(section, set())
        for key, value in keys.items():
            if key not in allowed:
                raise ParameterError(f"unknown config key {section}.{key}")
            out[section][key] = value
    return out


def _number(raw: dict, section: str, key: str, positive: bool = False) -> float:
    value = raw[section].get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"config key {section}.{key} must be a number")
    v = float(value)
    if positive and v <= 0:
        raise ParameterError(f"config key {section}.{key} must be > 0")
    return v


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated scenario: typed parameter blocks plus run settings."""

    phys: PhysicalParams
    ref_params: ReferenceParams
    solver: SolverConfig
    control: ControllerConfig
    planner_order: int
    gevrey_d: float
    gevrey_m_max: int
    horizon: float
    log_every: int
    s0: float
    v0: float
    t0_kind: str
    t0_surface: float
    preflight_samples: int
    field_times: tuple[float, ...]
    raw: dict = field(repr=False, compare=False)

    def reference(self) -> ReferenceTrajectory:
        return ReferenceTrajectory.from_params(self.ref_params)

    def planner(self) -> SeriesPlanner:
        return SeriesPlanner(
            self.phys,
            self.reference(),
            N=self.planner_order,
            gevrey_d=self.gevrey_d,
            gevrey_m_max=self.gevrey_m_max,
        )

    def initial_profile(self):
        """Initial temperature as a function of x on [0, s0]."""
        t_m = self.phys.T_m
        surface = self.t0_surface
        s0 = self.s0
        if self.t0_kind == "uniform":
            return lambda x: t_m + 0.0 * x
        return lambda x: t_m + surface * (1.0 - x / s0)


def _build(raw: dict) -> ScenarioConfig:
    phys = PhysicalParams.from_material(
        k=_number(raw, "physical", "conductivity", positive=True),
        rho=_number(raw, "physical", "density", positive=True),
        c_p=_number(raw, "physical", "specific_heat", positive=True),
        latent_heat=_number(raw, "physical", "latent_heat", positive=True),
        epsilon=_number(raw, "physical", "relaxation_time", positive=True),
        T_m=_number(raw, "physical", "melt_temp"),
        L=_number(raw, "physical", "domain_length", positive=True),
        alpha=(_number(raw, "physical", "diffusivity", positive=True)
               if "diffusivity" in raw["physical"] else None),
        beta=(_number(raw, "physical", "stefan_coeff", positive=True)
              if "stefan_coeff" in raw["physical"] else None),
    )
    ref_params = ReferenceParams(
        omega=_number(raw, "reference", "omega", positive=True),
        delta1=_number(raw, "reference", "delta1", positive=True),
        delta2=_number(raw, "reference", "delta2", positive=True),
        v_min=_number(raw, "reference", "v_min", positive=True),
        s_r0=_number(raw, "reference", "s_start", positive=True),
        s_bar=_number(raw, "reference", "s_final", positive=True),
        L=phys.L,
    )
    s0 = _number(raw, "run", "s0", positive=True)
    solver = SolverConfig(
        n_grid=int(_number(raw, "solver", "n_grid", positive=True)),
        dt=_number(raw, "solver", "dt", positive=True),
        theta=_number(raw, "solver", "theta"),
        s_floor=(_number(raw, "solver", "s_floor", positive=True)
                 if "s_floor" in raw["solver"] else s0 / 2.0),
    )
    control = ControllerConfig(c=_number(raw, "controller", "gain"))
    t0_kind = raw["run"]["t0_kind"]
    if t0_kind not in ("linear", "uniform"):
        raise ParameterError("config key run.t0_kind must be 'linear' or 'uniform'")
    field_times = raw["run"]["field_times"]
    if not isinstance(field_times, (list, tuple)) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in field_times
    ):
        raise ParameterError("config key run.field_times must be a list of numbers")
    order = int(_number(raw, "planner", "order", positive=True))
    m_max = int(_number(raw, "planner", "gevrey_m_max", positive=True))
    return ScenarioConfig(
        phys=phys,
        ref_params=ref_params,
        solver=solver,
        control=control,
        planner_order=order,
        gevrey_d=_number(raw, "planner", "gevrey_d", positive=True),
        gevrey_m_max=m_max,
        horizon=_number(raw, "run", "horizon", positive=True),
        log_every=int(_number(raw, "run", "log_every", positive=True)),
        s0=s0,
        v0=_number(raw, "run", "v0"),
        t0_kind=t0_kind,
        t0_surface=_number(raw, "run", "t0_surface"),
        preflight_samples=int(_number(raw, "run", "preflight_samples", positive=True)),
        field_times=tuple(float(v) for v in field_times),
        raw=raw,
    )


def parse_config(path: str | None = None, overrides: list[str] | None = None) -> ScenarioConfig:
    """Load, merge, and validate a scenario.

    ``path`` may be None (pure defaults); ``overrides`` are
    ``section.key=value`` strings applied after the file.
    """
    user: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                user = tomllib.load(fh)
            except tomllib.TOMLDecodeError as err:
                raise ParameterError(f"{path}: invalid TOML: {err}") from err
    raw = _merge(DEFAULTS, user)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return _build(raw)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides, values in TOML syntax."""
    out = {section: dict(keys) for section, keys in raw.items()}
    for item in overrides:
        if "=" not in item:
            raise ParameterError(f"override must look like section.key=value, got {item!r}")
        dotted, text = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2:
            raise ParameterError(f"override key must be section.key, got {dotted!r}")
        section, key = parts
        if section not in out:
            raise ParameterError(f"unknown config section [{section}]")
        allowed = set(DEFAULTS[section]) | _OPTIONAL_KEYS.get(section, set())
        if key not in allowed:
            raise ParameterError(f"unknown config key {section}.{key}")
        try:
            value = tomllib.loads(f"v = {text.strip()}")["v"]
        except tomllib.TOMLDecodeError as err:
            raise ParameterError(f"cannot parse override value {text!r}: {err}") from err
        out[section][key] = value
    return out


def config_hash(raw: dict) -> str:
    """Stable short hash of the effective configuration."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
