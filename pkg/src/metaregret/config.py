"""Run configuration: JSON schema, defaults and loading."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from . import games as G
from . import regret as RG


class ConfigError(ValueError):
    pass


_KIND = {"type": "string", "enum": sorted(RG.KINDS)}

_ALGO = {
    "oneOf": [
        _KIND,
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": _KIND,
                "label": {"type": "string"},
                "checkpoint": {"type": "string"},
                "schedule": {"enum": ["simultaneous", "alternating"]},
                "averaging": {"enum": ["uniform", "linear", "discounted"]},
                "bypass": {"type": "boolean"},
            },
        },
    ]
}

_TRAINING = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": _KIND,
        "T": {"type": "integer", "minimum": 1},
        "epochs": {"type": "integer", "minimum": 1},
        "batch_games": {"type": "integer", "minimum": 1},
        "steps_per_epoch": {"type": "integer", "minimum": 1},
        "hidden": {"type": "integer", "minimum": 1},
        "static": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "layer_norm": {"type": "boolean"},
        "input_scale": {"type": "number", "exclusiveMinimum": 0},
        "lr": {"type": "number", "exclusiveMinimum": 0},
        "entropy_coef": {"type": "number", "minimum": 0},
        "clip_norm": {"type": "number", "exclusiveMinimum": 0},
        "eval_games": {"type": "integer", "minimum": 0},
        "eval_every": {"type": "integer", "minimum": 0},
        "check_chain": {"type": "boolean"},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "game": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": list(G.FAMILIES)},
                "seed": {"type": "integer", "minimum": 0},
                "count": {"type": "integer", "minimum": 1},
                "params": {"type": "object"},
            },
        },
        "eval_game": {"$ref": "#/properties/game"},
        "algos": {"type": "array", "items": _ALGO, "minItems": 1},
        "iters": {"type": "integer", "minimum": 1},
        "eval_horizon": {"type": "integer", "minimum": 1},
        "schedule": {"enum": ["simultaneous", "alternating"]},
        "averaging": {"enum": ["uniform", "linear", "discounted"]},
        "delay_ms": {"type": "number", "minimum": 0},
        "thresholds": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "training": _TRAINING,
        "gradcheck": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "draws": {"type": "integer", "minimum": 1},
                "meta_draws": {"type": "integer", "minimum": 1},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ensembles": {"type": "integer", "minimum": 0},
                "max_games": {"type": "integer", "minimum": 1},
                "max_steps": {"type": "integer", "minimum": 1},
            },
        },
        "trend_from": {"type": "integer", "minimum": 1},
    },
}

DEFAULTS = {
    "game": {"family": "rock_paper_scissors", "seed": 0, "count": 100, "params": {}},
    "algos": ["RM", "RM_PLUS", "PRM", "PRM_PLUS", "DRM", "SPRM_PLUS"],
    "iters": 64,
    "delay_ms": 0,
    "thresholds": [1.0, 0.5, 0.1, 0.05],
    "training": {},
    "gradcheck": {"draws": 100, "meta_draws": 100},
    "analysis": {"ensembles": 50, "max_games": 5, "max_steps": 8},
    "trend_from": 64,
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(doc: dict) -> dict:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"at {where}: {exc.message}") from None
    return _merge(DEFAULTS, doc)


def load(path) -> dict:
    if path is None:
        return validate({})
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return validate(doc)


def digest(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def algo_entries(cfg: dict) -> list[dict]:
    """Normalise ``algos`` to dicts with at least ``kind`` and ``label``."""
    out = []
    for a in cfg["algos"]:
        entry = {"kind": a} if isinstance(a, str) else dict(a)
        entry.setdefault("label", RG.KINDS[entry["kind"]].display)
        for key in ("schedule", "averaging"):
            if key not in entry and key in cfg:
                entry[key] = cfg[key]
        out.append(entry)
    return out
