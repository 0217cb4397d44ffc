"""Experiment configuration: YAML text validated against a versioned schema."""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema
import yaml

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Invalid configuration; ``str()`` carries key path and line diagnostics."""


_num = {"type": "number"}
_int_pos = {"type": "integer", "minimum": 1}
_names = {"type": "array", "items": {"type": "string"}}
_checkpoints = {"type": "array", "items": _int_pos, "minItems": 1}
_complex = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


def _kind(name: str, props: dict | None = None, required=()) -> dict:
    return _obj({"kind": {"const": name}, **(props or {})}, ["kind", *required])


OPERATOR = {"oneOf": [
    _kind("rotation", {"alpha": {"type": ["string", "number"]}, "precision": _int_pos,
                       "symbol": {"type": "string"}}, ["alpha"]),
    _kind("diagonal", {"mu": {"type": "array", "items": _complex}}, ["mu"]),
    _kind("mode_projector", {"modes": {"type": "array", "items": {"type": "integer"}}}, ["modes"]),
    _kind("identity"),
    _kind("zero"),
    _kind("permutation", {"multiplier": {"type": "integer"}, "shift": {"type": "integer"},
                          "perm": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                          "phase_turn": _num}),
    _kind("doubling"),
    _kind("dense", {"csv": {"type": "string"}, "csv_imag": {"type": "string"}}, ["csv"]),
    _kind("doubly_stochastic", {"sweeps": _int_pos}),
]}

FUNCTION = {"oneOf": [
    _kind("mode", {"m": {"type": "integer"}}, ["m"]),
    _kind("sawtooth"),
    _kind("constant", {"value": _complex}),
    _kind("zero"),
    _kind("random", {"mean_zero": {"type": "boolean"}, "real": {"type": "boolean"}}),
    _kind("stable_projected", {"of": {"type": "string"}, "real": {"type": "boolean"}}),
    _kind("csv", {"path": {"type": "string"}}, ["path"]),
]}

GENERATOR = {"oneOf": [
    _kind("rotation_flow", {"alpha": _num}, ["alpha"]),
    _kind("zero"),
    _kind("diagonal", {"rates": {"type": "array", "items": _complex}}, ["rates"]),
    _kind("permutation_laplacian", {"permutation": {"type": "string"}, "rate": {"type": "number", "minimum": 0}},
          ["permutation"]),
]}

SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "name": {"type": "string"},
    "description": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "threads": _int_pos,
    "out": {"type": "string"},
    "basis": {"oneOf": [_kind("spectral", {"M": {"type": "integer", "minimum": 0}}, ["M"]),
                        _kind("spatial", {"G": _int_pos}, ["G"])]},
    "operators": {"type": "object", "additionalProperties": OPERATOR},
    "chain": _obj({"T": {**_names, "minItems": 1}, "A": _names}, ["T"]),
    "f": FUNCTION,
    "average": _obj({
        "N": _int_pos,
        "checkpoints": _checkpoints,
        "abs": {"type": "boolean"},
        "G_eval": _int_pos,
        "weight": _obj({"gamma_turns": {"type": "array", "items": _num, "minItems": 1},
                        "qs": {"type": "array", "items": _complex, "minItems": 1}}, ["gamma_turns", "qs"]),
    }, ["N"]),
    "predict": _obj({"form": {"enum": ["full", "printed"]}, "tol_match": {"type": "number", "exclusiveMinimum": 0},
                     "tol_sep": {"type": "number", "exclusiveMinimum": 0},
                     "max_sup_err": {"type": "number", "minimum": 0}}),
    "decompose": _obj({"operators": _names, "tol_unimodular": {"type": "number", "exclusiveMinimum": 0},
                       "cond_max": {"type": "number", "exclusiveMinimum": 0}}),
    "validate": _obj({"operators": _names, "trials": _int_pos, "tol": {"type": "number", "minimum": 0}}),
    "volterra": _obj({"epsilon": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                      "trials": _int_pos, "n_max": _int_pos, "M_cap": _int_pos, "k": {"enum": [1, 2, 3, 4]}}),
    "semigroup": _obj({"generators": {"type": "array", "items": GENERATOR, "minItems": 1},
                       "A": _names, "horizon": {"type": "number", "exclusiveMinimum": 0},
                       "h": {"type": "number", "exclusiveMinimum": 0},
                       "checkpoints": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                       "abs": {"type": "boolean"}}, ["generators", "horizon"]),
}, ["schema_version"])


def _node_line(node, path) -> int | None:
    """1-based line of the YAML node at ``path`` (deepest existing ancestor)."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
        line = node.start_mark.line + 1
    return line


def _key_path(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def _best_message(err: jsonschema.ValidationError) -> str:
    # for oneOf on "kind", report the branch matching the declared kind
    if err.validator == "oneOf" and isinstance(err.instance, dict) and "kind" in err.instance:
        kinds = [s["properties"]["kind"].get("const") for s in err.validator_value]
        if err.instance["kind"] not in kinds:
            return f"unknown kind {err.instance['kind']!r} (expected one of {', '.join(map(str, kinds))})"
        for sub in err.context:
            if sub.schema_path and sub.schema_path[0] == kinds.index(err.instance["kind"]):
                where = _key_path(sub.relative_path)
                return sub.message if where == "<root>" else f"{where}: {sub.message}"
    return err.message


def validate(data, node=None) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            path = list(e.absolute_path)
            ln = _node_line(node, path) if node is not None else None
            at = f" (line {ln})" if ln else ""
            lines.append(f"key '{_key_path(path)}'{at}: {_best_message(e)}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))


def parse(text: str, source: str = "<config>") -> dict:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML syntax error: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    validate(data, node)
    return data


def load(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse(text, str(path))


def merge(base: dict, override: dict) -> dict:
    """Recursive merge; mappings merge key-wise, everything else is replaced."""
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and "kind" not in v:
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
