"""Scenario files: schema, validation and loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import jsonschema

from .certify import THEOREMS, Region
from .mapping import Mapping, mapping_from_spec
from .sampling import SamplingPlan


class ScenarioError(ValueError):
    """Unreadable or schema-violating scenario; ``path`` is a JSON pointer."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path


_NUMBER = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VECTOR = {"type": "array", "items": _NUMBER, "minItems": 1}
_POINT = {"oneOf": [_NUMBER, _VECTOR]}
_BOX = {"type": "array", "minItems": 1, "maxItems": 8,
        "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}}

_DC_ENTRY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["w", "plus", "minus"],
    "properties": {
        "w": _VECTOR,
        "plus": {"type": "array", "items": _VECTOR, "minItems": 1},
        "minus": {"type": "array", "items": _VECTOR, "minItems": 1},
    },
}

SCHEMA: dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["mapping"],
    "properties": {
        "command": {"enum": ["bounds", "certify", "invert", "audit"]},
        "mapping": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["expr"],
                    "properties": {"expr": {"type": "string"}, "dim": {"type": "integer", "minimum": 1},
                                   "dc": {"type": "array", "items": _DC_ENTRY, "minItems": 1}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["corpus"],
                    "properties": {"corpus": {"type": "string"}, "params": {"type": "object"},
                                   "dc": {"type": "array", "items": _DC_ENTRY, "minItems": 1}},
                },
            ]
        },
        "region": {
            "type": "object",
            "additionalProperties": False,
            "required": ["box"],
            "properties": {"box": _BOX, "grid": {"type": "integer", "minimum": 3}},
        },
        "plan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "radii": {"type": "array", "items": _POS, "minItems": 1},
                "pairs_per_radius": {"type": "integer", "minimum": 16},
                "directions_per_sphere": {"type": "integer", "minimum": 16},
                "seed": {"type": "integer", "minimum": 0},
                "margin": {"type": "number", "minimum": 0},
                "targets": {"type": "integer", "minimum": 0},
            },
        },
        "theorem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": list(THEOREMS)},
                "kappa": _POS,
                "mu": {"type": "number", "minimum": 0},
                "alpha_hat": _POS,
                "gamma": _POS,
                "eta": _POS,
                "hypo_exponent": {"enum": [1, 2]},
                "family": {"enum": ["builtin", "default", "affine", "translated"]},
                "sphere_count": {"type": "integer", "minimum": 2},
            },
        },
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "required": ["point"],
            "properties": {
                "point": _POINT,
                "kinds": {"type": "array", "items": {"enum": ["lip", "inj", "lop", "cov", "reg"]},
                          "minItems": 1, "uniqueItems": True},
            },
        },
        "invert": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "targets": {"type": "array", "items": _POINT, "minItems": 1},
                "alpha": _POS,
                "x0": _POINT,
                "tau": _POS,
            },
        },
        "audit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bound": _POS,
                "pairs": {"type": "integer", "minimum": 1},
                "box": _BOX,
                "alpha": _POS,
                "tau": _POS,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string", "minLength": 1}},
        },
    },
}

_VALIDATOR = jsonschema.Draft7Validator(SCHEMA)


@dataclass(frozen=True)
class Scenario:
    raw: dict
    mapping: Mapping
    plan: SamplingPlan
    region: Optional[Region]
    theorem: dict = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def command(self) -> str:
        return self.raw.get("command", "certify")

    def section(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))

    @property
    def out_dir(self) -> str:
        return self.raw.get("output", {}).get("dir", "out")


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def validate(doc: Any) -> None:
    """Raise ScenarioError for the first schema violation (deepest, then first in document order)."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ScenarioError(best.message, _pointer(best.absolute_path))


def load_scenario(doc: dict, source: Optional[str] = None) -> Scenario:
    validate(doc)
    try:
        mapping = mapping_from_spec(doc["mapping"])
    except ValueError as e:
        raise ScenarioError(str(e), "/mapping") from e
    try:
        plan = SamplingPlan.from_dict(doc.get("plan", {}))
    except ValueError as e:
        raise ScenarioError(str(e), "/plan") from e
    region = None
    if "region" in doc:
        try:
            region = Region.from_dict(doc["region"])
        except ValueError as e:
            raise ScenarioError(str(e), "/region") from e
        if region.dim != mapping.dim_in:
            raise ScenarioError(f"region is {region.dim}-dimensional, mapping acts on R^{mapping.dim_in}",
                                "/region/box")
    return Scenario(doc, mapping, plan, region, dict(doc.get("theorem", {})), source)


def read_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return load_scenario(doc, path)
