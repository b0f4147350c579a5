"""Experiment configuration: YAML ingestion, schema validation and digests."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1
SAMPLER_KINDS = ["exact", "squashed", "thermal", "distinguishable", "ips", "greedy"]

_range = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_chi = {"anyOf": [{"type": "integer", "minimum": 0}, {"type": "null"}]}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "seed"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "circuit": {"anyOf": [{"type": "object"}, {"type": "string"}]},
        "instance": {
            "type": "object",
            "required": ["modes"],
            "additionalProperties": False,
            "properties": {
                "modes": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "r_range": _range,
                "eta_range": _range,
                "eta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "samplers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "count"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": SAMPLER_KINDS},
                    "count": {"type": "integer", "minimum": 0},
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                },
            },
        },
        "mps": {
            "type": "object",
            "required": ["count"],
            "additionalProperties": False,
            "properties": {
                "chi": {"type": "array", "items": _chi, "minItems": 1},
                "d": {"anyOf": [{"type": "integer", "minimum": 1}, {"type": "null"}]},
                "count": {"type": "integer", "minimum": 0},
                "transmission_scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "split": {"enum": ["sources", "williamson"]},
                "checkpoint": {"type": "boolean"},
            },
        },
        "validation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "orders": {"type": "array", "items": {"enum": [2, 3]}},
                "click_numbers": {"type": "boolean"},
                "bayesian": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "against": {"enum": ["squashed", "thermal"]},
                        "subsystems": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                        },
                    },
                },
            },
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d"],
            "properties": {
                "M": {"type": "number", "exclusiveMinimum": 0},
                "d": {"type": "number", "exclusiveMinimum": 0},
                "chi": {"type": "number", "exclusiveMinimum": 0},
                "log10_chi": {"type": "number"},
                "N_eff": {"type": "number", "minimum": 0},
                "baseline": {"type": "string"},
                "baselines_file": {"type": "string"},
                "prefactor": {"type": "number", "exclusiveMinimum": 0},
                "quantum_sample_time": {"type": "number", "exclusiveMinimum": 0},
                "chi_fit": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["eps_target"],
                    "properties": {"eps_target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
                },
            },
        },
    },
    "not": {"required": ["circuit", "instance"]},
}

# keys that select where or how fast to run, not what to compute
_NON_SEMANTIC = ("output_dir", "threads")


@dataclass(frozen=True)
class ExperimentConfig:
    data: dict
    digest: str
    base_dir: Path

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def name(self) -> str:
        return self.data.get("name", "experiment")

    @property
    def threads(self) -> int:
        return self.data.get("threads", 1)

    def output_dir(self, override=None) -> Path:
        if override is not None:
            return Path(override)
        return self.base_dir / self.data.get("output_dir", "out")

    def section(self, key: str) -> dict | None:
        return self.data.get(key)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def config_digest(data: dict) -> str:
    """SHA-256 of the canonical JSON form, ignoring output location and thread count."""
    body = {k: v for k, v in data.items() if k not in _NON_SEMANTIC}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def validate_config(data) -> None:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None
    for s in data.get("samplers", []):
        if s["kind"] != "exact" and "circuit" not in data and "instance" not in data:
            raise ConfigError("samplers need a circuit or instance section")


def config_from_dict(data: dict, base_dir=".") -> ExperimentConfig:
    data = copy.deepcopy(data)
    validate_config(data)
    return ExperimentConfig(data, config_digest(data), Path(base_dir))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return config_from_dict(data, path.parent)
