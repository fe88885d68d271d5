"""Experiment configuration: flat keys plus a nested ``law`` mapping.

Files are YAML (JSON is valid YAML).  Every field error carries the dotted
field path and, when the value came from a file, its line number.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .laws import LawSpecError, law_from_dict
from .rng import default_seed

COMMANDS = ("sample", "sweep", "recursion-check", "summability", "vacancy-cert", "slice-check",
            "threshold", "lambda-d", "e-event", "layout-dump", "knitting-check")

# name -> (kind, constraint); kinds: int, float, bool, str, law, floats (scalar or list), list, rect
FIELDS: dict[str, tuple[str, Optional[str]]] = {
    "command": ("str", None),
    "seed": ("int", ">=0"),
    "out_dir": ("str", None),
    "format": ("str", "json|csv|both"),
    "workers": ("int", ">=1"),
    "lambda": ("floats", ">0"),
    "law": ("law", None),
    "b": ("float", ">0"),
    "kappa": ("float", ">=10"),
    "n_max": ("int", ">=0"),
    "n_reps": ("int", ">=1"),
    "n_empirical": ("int", ">=0"),
    "head_reps": ("int", ">=1"),
    "tail_reps": ("int", ">=1"),
    "n_trunc": ("int", ">=0"),
    "alpha": ("floats", ">0"),
    "scales": ("floats", ">0"),
    "L": ("float", ">0"),
    "budget": ("int", ">=1"),
    "p_star": ("float", "(0,1)"),
    "tol": ("float", ">0"),
    "bracket": ("floats", ">0"),
    "phase": ("str", "occupied|vacant"),
    "d": ("int", ">=3"),
    "window": ("float", ">0"),
    "brute_force": ("bool", None),
    "k_max": ("int", ">=1"),
    "r0": ("float", ">0"),
    "censor_R": ("float", ">0"),
    "censor_threshold": ("float", "(0,1)"),
    "h_step": ("float", ">0"),
    "region": ("rect", None),
}


RUNTIME_KEYS = ("out_dir", "workers", "format")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str, line: Optional[int] = None, source: str = "<config>"):
        self.field, self.line, self.source = field, line, source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(f"{where}field '{field}': {message}")


def _line_map(text: str) -> dict[str, int]:
    """Dotted key path -> 1-based line of the key, from the YAML node tree."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    out: dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                out[path] = k.start_mark.line + 1
                walk(v, path)

    walk(root, "")
    return out


def _check(name: str, value, constraint: Optional[str]):
    if constraint is None:
        return None
    vals = value if isinstance(value, list) else [value]
    for v in vals:
        if constraint == ">0" and not v > 0:
            return f"must be > 0, got {v!r}"
        if constraint == ">=0" and not v >= 0:
            return f"must be >= 0, got {v!r}"
        if constraint == ">=1" and not v >= 1:
            return f"must be >= 1, got {v!r}"
        if constraint == ">=3" and not v >= 3:
            return f"must be >= 3, got {v!r}"
        if constraint == ">=10" and not v >= 10:
            return f"must be >= 10, got {v!r}"
        if constraint == "(0,1)" and not 0 < v < 1:
            return f"must lie in (0, 1), got {v!r}"
        if "|" in constraint and v not in constraint.split("|"):
            return f"must be one of {constraint.split('|')}, got {v!r}"
    return None


def _coerce(name: str, kind: str, value):
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise TypeError("expected an integer")
        return int(value)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        v = float(value)
        if not math.isfinite(v):
            raise TypeError("expected a finite number")
        return v
    if kind == "bool":
        if not isinstance(value, bool):
            raise TypeError("expected true or false")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    if kind == "floats":
        if isinstance(value, list):
            return [_coerce(name, "float", v) for v in value]
        return _coerce(name, "float", value)
    if kind == "law":
        law_from_dict(value, name)  # validation only; the echo keeps the plain mapping
        return {k: (float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v)
                for k, v in value.items()}
    if kind == "rect":
        if not isinstance(value, dict) or set(value) != {"lo", "hi"}:
            raise TypeError("expected a mapping with 'lo' and 'hi'")
        lo = [_coerce(name, "float", v) for v in value["lo"]]
        hi = [_coerce(name, "float", v) for v in value["hi"]]
        if len(lo) != 2 or len(hi) != 2 or any(a >= b for a, b in zip(lo, hi)):
            raise TypeError("need 2D corners with lo < hi")
        return {"lo": lo, "hi": hi}
    raise AssertionError(kind)


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)

    def get(self, key: str, default: Any = None):
        return self.values.get(key, default)

    @property
    def seed(self) -> int:
        return self.values.get("seed", default_seed())

    @property
    def law(self):
        return law_from_dict(self.values["law"]) if "law" in self.values else None

    def echo(self) -> dict:
        """Every experiment-defining key; where and how fast it runs is left out."""
        return {"command": self.command,
                **{k: self.values[k] for k in sorted(self.values) if k not in RUNTIME_KEYS}}

    def to_json(self) -> str:
        return json.dumps(self.echo(), sort_keys=True, indent=1)


def validate(raw: dict, command: Optional[str] = None, lines: Optional[dict] = None,
             source: str = "<config>") -> ExperimentConfig:
    lines = lines or {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a mapping", 1, source)
    raw = dict(raw)
    file_cmd = raw.pop("command", None)
    cmd = command or file_cmd
    if cmd not in COMMANDS:
        raise ConfigError("command", f"unknown command {cmd!r}; choose from {list(COMMANDS)}",
                          lines.get("command"), source)
    if command and file_cmd and file_cmd != command:
        raise ConfigError("command", f"file is for {file_cmd!r} but {command!r} was requested",
                          lines.get("command"), source)
    values = {}
    for key, val in raw.items():
        if key not in FIELDS:
            raise ConfigError(key, f"unknown field; known fields: {sorted(FIELDS)}", lines.get(key), source)
        kind, constraint = FIELDS[key]
        try:
            v = _coerce(key, kind, val)
        except LawSpecError as exc:
            raise ConfigError(exc.field, str(exc).split(": ", 1)[-1],
                              lines.get(exc.field, lines.get(key)), source) from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, f"{exc} (got {val!r})", lines.get(key), source) from None
        msg = _check(key, v, constraint)
        if msg:
            raise ConfigError(key, msg, lines.get(key), source)
        values[key] = v
    return ExperimentConfig(cmd, values)


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value", None, "<command line>")
    key, val = text.split("=", 1)
    try:
        parsed = yaml.safe_load(val)
    except yaml.YAMLError as exc:
        raise ConfigError(key, f"cannot parse value: {exc}", None, "<command line>") from None
    return key.strip(), parsed


def load_config(path: Optional[str], command: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    raw: dict = {}
    lines: dict = {}
    source = "<command line>"
    if path:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("<file>", str(exc), None, source) from None
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError("<syntax>", str(getattr(exc, "problem", exc)),
                              mark.line + 1 if mark else None, source) from None
        lines = _line_map(text)
    for k, v in (overrides or {}).items():
        *parents, leaf = k.split(".")
        node = raw
        for p in parents:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[leaf] = v
        lines.pop(k, None)
    return validate(raw, command, lines, source)
