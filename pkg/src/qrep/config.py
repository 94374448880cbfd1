"""Run configuration: JSON schema, parsing, defaults, and round-tripping.

A config file may omit everything; every field then falls back to the studied
hardware setup and the default sweep scenarios. Unknown keys are rejected at
every nesting level so typos fail loudly instead of silently running the
defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Any, Mapping

import jsonschema

from .fock import A_ONLY, B_ONLY, BOTH_PATTERNS
from .rates import HardwareParams
from .sweep import IDEALIZED, NAMED_REGIMES, STRATEGIES, LossRegime, Scenario

CONFIG_VERSION = 1

#: default local-loss-axis grid for the fidelity sweep (0 to 0.9, step 0.05)
DEFAULT_EPSILON_L_GRID = tuple(round(0.05 * k, 10) for k in range(0, 19))


class ConfigError(Exception):
    """Any problem that prevents a usable run configuration."""


@dataclass(frozen=True)
class ElinkSettings:
    """Evaluation point and strategy selection for the link command."""

    q: float = 0.1
    lam: float = 0.1
    epsilon_r: float = 0.5
    epsilon_l: float = 0.0
    strategies: tuple[str, ...] = STRATEGIES
    click_pattern: str = BOTH_PATTERNS


@dataclass(frozen=True)
class FidelitySweepSettings:
    """Fixed point and local-loss axis for the fidelity-vs-loss sweep."""

    q: float = 0.1
    lam: float = 0.1
    epsilon_r: float = 0.5
    epsilon_l_grid: tuple[float, ...] = DEFAULT_EPSILON_L_GRID
    strategies: tuple[str, ...] = STRATEGIES


@dataclass(frozen=True)
class RunConfig:
    version: int
    seed: int
    out_dir: str
    hardware: HardwareParams
    elink: ElinkSettings
    fidelity_sweep: FidelitySweepSettings
    scenarios: tuple[Scenario, ...]


_NUMBER = {"type": "number"}
_PROBABILITY = {"type": "number", "minimum": 0, "maximum": 1}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}
_STRATEGY = {"type": "string", "enum": list(STRATEGIES)}
_GRID = {"type": "array", "items": {"type": "number"}, "minItems": 1}

_REGIME_SCHEMA = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["name", "eta_qfc", "eta_qm"],
            "properties": {
                "name": {"type": "string", "minLength": 1},
                "eta_qfc": _PROBABILITY,
                "eta_qm": _PROBABILITY,
            },
        },
    ]
}

_SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["architecture", "strategy", "hops", "regime"],
    "properties": {
        "architecture": {"type": "string", "enum": ["atom", "hybrid"]},
        "strategy": _STRATEGY,
        "hops": {"type": "integer", "minimum": 0, "maximum": 2},
        "regime": _REGIME_SCHEMA,
        "d_end_km": _GRID,
        "q_grid": _GRID,
        "lam_grid": _GRID,
        "n_temp_grid": {"type": "array", "items": _COUNT, "minItems": 1},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "version": {"type": "integer", "const": CONFIG_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string", "minLength": 1},
        "hardware": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c_fiber": _POSITIVE,
                "fiber_loss_db_per_km": {"type": "number", "minimum": 0},
                "t_atom": _POSITIVE,
                "t_spdc": _POSITIVE,
                "t_meas": _POSITIVE,
                "t_cnot": _POSITIVE,
                "n_atom": _COUNT,
                "n_mul": _COUNT,
                "eta_qfc": _PROBABILITY,
                "eta_qm": _PROBABILITY,
                "n_temp": _COUNT,
                "n_freq": _COUNT,
                "lambda": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "q": _PROBABILITY,
                "f_threshold": _PROBABILITY,
            },
        },
        "elink": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "q": _PROBABILITY,
                "lambda": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "epsilon_r": _PROBABILITY,
                "epsilon_l": _PROBABILITY,
                "strategies": {"type": "array", "items": _STRATEGY, "minItems": 1},
                "click_pattern": {
                    "type": "string",
                    "enum": [A_ONLY, B_ONLY, BOTH_PATTERNS],
                },
            },
        },
        "fidelity_sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "q": _PROBABILITY,
                "lambda": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "epsilon_r": _PROBABILITY,
                "epsilon_l_grid": _GRID,
                "strategies": {"type": "array", "items": _STRATEGY, "minItems": 1},
            },
        },
        "scenarios": {"type": "array", "items": _SCENARIO_SCHEMA},
    },
}


def default_scenarios() -> tuple[Scenario, ...]:
    """Replica sweep set: both architectures at zero to two hops, idealized."""
    scenarios = []
    for hops in (0, 1, 2):
        scenarios.append(Scenario("hybrid", "pnr+epl", hops, IDEALIZED))
        scenarios.append(Scenario("atom", "epl", hops, IDEALIZED))
    return tuple(scenarios)


def _build_regime(raw: Any, index: int) -> LossRegime:
    if isinstance(raw, str):
        try:
            return NAMED_REGIMES[raw]
        except KeyError:
            known = ", ".join(sorted(NAMED_REGIMES))
            raise ConfigError(
                f"config value error at scenarios[{index}].regime: unknown "
                f"regime {raw!r} (known: {known})"
            ) from None
    return LossRegime(raw["name"], raw["eta_qfc"], raw["eta_qm"])


def _build_scenario(raw: Mapping[str, Any], index: int) -> Scenario:
    kwargs: dict[str, Any] = {}
    if "d_end_km" in raw:
        kwargs["d_end_km"] = tuple(float(v) for v in raw["d_end_km"])
    if "q_grid" in raw:
        kwargs["q_grid"] = tuple(float(v) for v in raw["q_grid"])
    if "lam_grid" in raw:
        kwargs["lam_grid"] = tuple(float(v) for v in raw["lam_grid"])
    if "n_temp_grid" in raw:
        kwargs["n_temp_grid"] = tuple(int(v) for v in raw["n_temp_grid"])
    return Scenario(
        architecture=raw["architecture"],
        strategy=raw["strategy"],
        hops=raw["hops"],
        regime=_build_regime(raw["regime"], index),
        **kwargs,
    )


def _build_hardware(raw: Mapping[str, Any]) -> HardwareParams:
    kwargs = dict(raw)
    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    try:
        return HardwareParams(**kwargs)
    except ValueError as exc:
        if "multiplexing budget" in str(exc):
            raise ConfigError(
                f"config constraint violation (hardware.n_temp * hardware.n_freq "
                f"must equal hardware.n_mul): {exc}"
            ) from exc
        raise ConfigError(f"config value error in hardware: {exc}") from exc


def _rename_lambda(raw: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(raw)
    if "lambda" in out:
        out["lam"] = out.pop("lambda")
    return out


def build_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a parsed JSON object and apply defaults."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        location = ".".join(str(p) for p in err.absolute_path) or "(top level)"
        raise ConfigError(f"config schema violation at {location}: {err.message}")

    hardware = _build_hardware(data.get("hardware", {}))
    try:
        elink_raw = _rename_lambda(data.get("elink", {}))
        if "strategies" in elink_raw:
            elink_raw["strategies"] = tuple(elink_raw["strategies"])
        elink = ElinkSettings(**elink_raw)
        fsweep_raw = _rename_lambda(data.get("fidelity_sweep", {}))
        if "strategies" in fsweep_raw:
            fsweep_raw["strategies"] = tuple(fsweep_raw["strategies"])
        if "epsilon_l_grid" in fsweep_raw:
            fsweep_raw["epsilon_l_grid"] = tuple(
                float(v) for v in fsweep_raw["epsilon_l_grid"]
            )
        fsweep = FidelitySweepSettings(**fsweep_raw)
        if "scenarios" in data:
            scenarios = tuple(
                _build_scenario(raw, i) for i, raw in enumerate(data["scenarios"])
            )
        else:
            scenarios = default_scenarios()
    except ValueError as exc:
        raise ConfigError(f"config value error: {exc}") from exc

    return RunConfig(
        version=data.get("version", CONFIG_VERSION),
        seed=data.get("seed", 0),
        out_dir=data.get("out_dir", "qrep_out"),
        hardware=hardware,
        elink=elink,
        fidelity_sweep=fsweep,
        scenarios=scenarios,
    )


def parse_config(path: str | None) -> RunConfig:
    """Load and validate a config file; ``None`` yields pure defaults."""
    if path is None:
        return build_config({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config parse error in {path}: top level must be an object")
    return build_config(data)


def effective_config(config: RunConfig) -> dict[str, Any]:
    """Serialize a config, defaults included, back to the schema's shape.

    Parsing the result reproduces ``config`` exactly, which makes the emitted
    sidecar a complete recipe for re-running any output.
    """
    hardware = asdict(config.hardware)
    hardware["lambda"] = hardware.pop("lam")
    scenarios = []
    for sc in config.scenarios:
        scenarios.append(
            {
                "architecture": sc.architecture,
                "strategy": sc.strategy,
                "hops": sc.hops,
                "regime": {
                    "name": sc.regime.name,
                    "eta_qfc": sc.regime.eta_qfc,
                    "eta_qm": sc.regime.eta_qm,
                },
                "d_end_km": list(sc.d_end_km),
                "q_grid": list(sc.q_grid),
                "lam_grid": list(sc.lam_grid),
                "n_temp_grid": list(sc.n_temp_grid),
            }
        )
    return {
        "version": config.version,
        "seed": config.seed,
        "out_dir": config.out_dir,
        "hardware": hardware,
        "elink": {
            "q": config.elink.q,
            "lambda": config.elink.lam,
            "epsilon_r": config.elink.epsilon_r,
            "epsilon_l": config.elink.epsilon_l,
            "strategies": list(config.elink.strategies),
            "click_pattern": config.elink.click_pattern,
        },
        "fidelity_sweep": {
            "q": config.fidelity_sweep.q,
            "lambda": config.fidelity_sweep.lam,
            "epsilon_r": config.fidelity_sweep.epsilon_r,
            "epsilon_l_grid": list(config.fidelity_sweep.epsilon_l_grid),
            "strategies": list(config.fidelity_sweep.strategies),
        },
        "scenarios": scenarios,
    }
