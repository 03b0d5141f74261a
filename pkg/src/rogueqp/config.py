"""Run configuration: JSON schema, defaults, and typed dataclasses."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .lattice import DecayProfile, FrequencyMatrix
from .solver import SCHEMES, SolverConfig

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_rho = {"anyOf": [_pos, {"const": "inf"}]}
_pos_int = {"type": "integer", "minimum": 1}
_opt = lambda s: {"anyOf": [s, {"type": "null"}]}  # noqa: E731

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {
            "type": "object",
            "required": ["omegas", "rho", "kappa"],
            "additionalProperties": False,
            "properties": {
                "d": _pos_int,
                "nu_blocks": {"type": "array", "items": _pos_int, "minItems": 1},
                "omegas": {"type": "array", "minItems": 1,
                           "items": {"type": "array", "items": _num, "minItems": 1}},
                "rho": {"type": "array", "items": _rho, "minItems": 1},
                "kappa": {"type": "array", "items": _pos, "minItems": 1},
                "amplitude": _pos,
            },
        },
        "regime": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "eps_list": {"type": "array", "minItems": 1,
                             "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                "eta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "mu": _pos,
                "z0": {"type": "number", "minimum": 0},
                "t": _num,
                "t_fraction": _opt({"type": "number", "minimum": 0}),
                "C_rem": _opt({"type": "number", "minimum": 0}),
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _opt(_pos),
                "scheme": {"enum": list(SCHEMES)},
                "k_max": _pos_int,
                "quad_nodes": {"type": "integer", "minimum": 2},
                "dealias_grid": _opt(_pos_int),
                "n_snapshots": _pos_int,
            },
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": _pos_int,
                "root_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "method": {"enum": ["auto", "direct", "tilted"]},
                "theta": _opt({"type": "number", "minimum": 0}),
                "tilt_mode": {"enum": ["grid", "phase", "fixed"]},
                "N": {"type": "integer", "minimum": 0},
                "grid": _opt(_pos_int),
                "event": {"enum": ["sup", "point"]},
                "x": _opt({"type": "array", "items": _num}),
                "chunk": _pos_int,
            },
        },
        "chernoff": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N_values": {"type": "array", "items": _pos_int, "minItems": 1},
                "nu_values": {"type": "array", "items": _pos_int, "minItems": 1},
                "n_x": _pos_int,
                "x_max_factor": {"type": "number", "exclusiveMinimum": 1},
                "n_samples": _pos_int,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json", "bin"]}},
            },
        },
    },
}


@dataclass(frozen=True)
class ModelConfig:
    omegas: list
    rho: list
    kappa: list
    amplitude: float = 1.0
    d: int | None = None
    nu_blocks: list | None = None

    def frequency_matrix(self) -> FrequencyMatrix:
        return FrequencyMatrix(self.omegas)

    def profile(self) -> DecayProfile:
        rho = [math.inf if r == "inf" else float(r) for r in self.rho]
        return DecayProfile(rho, [float(k) for k in self.kappa], float(self.amplitude))

    @property
    def nu(self) -> int:
        return sum(len(w) for w in self.omegas)


@dataclass(frozen=True)
class RegimeConfig:
    epsilon: float = 0.1
    eps_list: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    eta: float = 0.5
    mu: float = 0.5
    z0: float = 1.0
    t: float = 0.0
    t_fraction: float | None = None
    C_rem: float | None = None


@dataclass(frozen=True)
class SamplingConfig:
    n_samples: int = 20000
    root_seed: int = 0
    method: str = "auto"
    theta: float | None = None
    tilt_mode: str = "grid"
    N: int = 8
    grid: int | None = None
    event: str = "sup"
    x: list | None = None
    chunk: int = 4096


@dataclass(frozen=True)
class ChernoffConfig:
    N_values: list = field(default_factory=lambda: [1, 2])
    nu_values: list = field(default_factory=lambda: [1, 2])
    n_x: int = 10
    x_max_factor: float = 10.0
    n_samples: int = 1_000_000


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass(frozen=True)
class SolverBlock:
    dt: float | None = None
    scheme: str = "interaction_rk4"
    k_max: int = 6
    quad_nodes: int = 16
    dealias_grid: int | None = None
    n_snapshots: int = 10

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.dt, self.scheme, self.k_max, self.quad_nodes, self.dealias_grid)


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    regime: RegimeConfig = field(default_factory=RegimeConfig)
    solver: SolverBlock = field(default_factory=SolverBlock)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    chernoff: ChernoffConfig = field(default_factory=ChernoffConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


_BLOCKS = {"regime": RegimeConfig, "solver": SolverBlock, "sampling": SamplingConfig,
           "chernoff": ChernoffConfig, "output": OutputConfig}


def _error_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            parts.append(missing[0])
    elif err.validator == "additionalProperties":
        extra = [k for k in err.instance if k not in err.schema.get("properties", {})]
        if extra:
            parts.append(extra[0])
    return ".".join(parts)


def validate(doc: dict) -> None:
    """Schema plus cross-field checks; raises ``ConfigError`` naming the field path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(_error_path(err), err.message)
    m = doc["model"]
    nu = sum(len(w) for w in m["omegas"])
    if "nu_blocks" in m and list(m["nu_blocks"]) != [len(w) for w in m["omegas"]]:
        raise ConfigError("model.nu_blocks", "must list the length of each omegas block")
    if "d" in m and m["d"] != len(m["omegas"]):
        raise ConfigError("model.d", f"d={m['d']} but omegas has {len(m['omegas'])} blocks")
    for key in ("rho", "kappa"):
        if len(m[key]) != nu:
            raise ConfigError(f"model.{key}", f"needs {nu} entries (one per frequency)")
    x = doc.get("sampling", {}).get("x")
    if x is not None and len(x) != len(m["omegas"]):
        raise ConfigError("sampling.x", "point must have d coordinates")


def from_dict(doc: dict) -> RunConfig:
    validate(doc)
    kw = {"model": ModelConfig(**copy.deepcopy(doc["model"]))}
    for name, cls in _BLOCKS.items():
        if name in doc:
            kw[name] = cls(**copy.deepcopy(doc[name]))
    return RunConfig(**kw)


def load(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be a JSON object")
    return from_dict(doc)


# built-in defaults per subcommand; configs/*.json mirror these
DEFAULTS = {
    "dist-check": {
        "model": {"d": 2, "nu_blocks": [1, 1], "omegas": [[1.0], [1.4142135623730951]],
                  "rho": [3.0, 3.0], "kappa": [1.0, 1.0]},
        "regime": {"t": 0.7},
        "sampling": {"n_samples": 100000, "root_seed": 2024, "N": 8, "x": [0.3, -1.1]},
    },
    "linear-ldp": {
        "model": {"d": 1, "nu_blocks": [1], "omegas": [[1.0]], "rho": [3.0], "kappa": [1.0]},
        "regime": {"eps_list": [0.4, 0.2, 0.1, 0.05], "z0": 1.0, "eta": 0.5, "mu": 0.5},
        "sampling": {"n_samples": 20000, "root_seed": 7, "N": 16, "grid": 128},
    },
    "chernoff": {
        "model": {"d": 1, "nu_blocks": [1], "omegas": [[1.0]], "rho": [3.0], "kappa": [1.0]},
        "sampling": {"root_seed": 11},
        "chernoff": {"N_values": [1, 2], "nu_values": [1, 2], "n_x": 10, "x_max_factor": 10.0,
                     "n_samples": 1000000},
    },
    "tree-check": {
        "model": {"d": 1, "nu_blocks": [1], "omegas": [[1.0]], "rho": [5.0], "kappa": [1.0]},
    },
    "simulate": {
        "model": {"d": 1, "nu_blocks": [1], "omegas": [[1.0]], "rho": [5.0], "kappa": [1.0]},
        "regime": {"epsilon": 0.1, "eta": 0.5, "t_fraction": 0.5},
        "solver": {"scheme": "picard", "k_max": 6, "quad_nodes": 16, "n_snapshots": 10},
        "sampling": {"root_seed": 3, "N": 2},
        "output": {"formats": ["csv", "json", "bin"]},
    },
    "nonlinear-ldp": {
        "model": {"d": 1, "nu_blocks": [1], "omegas": [[1.0]], "rho": [4.0], "kappa": [1.0]},
        "regime": {"eps_list": [0.3, 0.2, 0.1], "z0": 1.0, "eta": 0.5, "t_fraction": 0.5},
        "sampling": {"n_samples": 20000, "root_seed": 5, "N": 8},
    },
}


def default_for(subcommand: str) -> RunConfig:
    return from_dict(copy.deepcopy(DEFAULTS[subcommand]))
