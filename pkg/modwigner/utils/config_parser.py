"""
Line-oriented run configuration.

Grammar::

    # comment (whole line or trailing)
    state = gkp(delta=0.15, logical=plus)
    l = 1.7724538509055159

    [grid]
    nx = 256
    nmax = 16

    [qec]
    ancilla = gkp(delta=0.02, kappa=0.02)
    sweep = delta=0.1:0.4:0.01

Section headers select a ``RunConfig`` section; keys before the first header
are either shortcuts (``state``, ``l``, ``seed``, ``out_dir``) or dotted
``section.key`` names. Values are left as text and coerced by the pydantic
schemas, except ``none``/``null`` and ``name(k=v, ...)`` state specs.
"""

import logging
import re
from typing import Any, Dict, List, Optional, Tuple

from pydantic import TypeAdapter, ValidationError

from ..exceptions import ConfigError
from ..schemas.run_config import RunConfig
from ..schemas.states import StateSpec

logger = logging.getLogger(__name__)

_SECTIONS = ("lattice", "grid", "wigner", "qec", "tomo", "output")
_TOP_LEVEL = {
    "state": ("state",),
    "l": ("lattice", "l"),
    "seed": ("output", "seed"),
    "out_dir": ("output", "out_dir"),
}
# keys whose values are state specs rather than scalars
_SPEC_KEYS = {("state",), ("qec", "ancilla")}

_HEADER = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_SPEC = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.DOTALL)

_state_adapter = TypeAdapter(StateSpec)


def _strip_comment(line: str) -> str:
    index = line.find("#")
    return line if index < 0 else line[:index]


def _scalar(raw: str) -> Optional[str]:
    value = raw.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return None if value.lower() in ("none", "null") else value


def _spec_fields(text: str, line: int = 0, column: int = 1) -> Dict[str, Any]:
    """Split ``name(k=v, ...)`` into ``{"kind": name, k: v, ...}``."""
    match = _SPEC.match(text)
    if not match:
        raise ConfigError(
            f"Expected a state spec like gkp(delta=0.15), got {text.strip()!r}",
            issues=[{"line": line, "column": column, "message": "malformed state spec"}],
        )
    fields: Dict[str, Any] = {"kind": match.group(1).lower()}
    body = match.group(2).strip()
    if not body:
        return fields
    offset = column + match.start(2)
    for part in body.split(","):
        if "=" not in part:
            raise ConfigError(
                f"State argument {part.strip()!r} is not key=value",
                issues=[{"line": line, "column": offset, "message": "missing '='"}],
            )
        key, value = part.split("=", 1)
        key = key.strip()
        if key in fields:
            raise ConfigError(
                f"Duplicate state argument {key!r}",
                issues=[{"line": line, "column": offset, "message": "duplicate argument"}],
            )
        fields[key] = _scalar(value)
        offset += len(part) + 1
    return fields


def _issues(exc: ValidationError, lines: Dict[Tuple[str, ...], int]) -> List[Dict[str, Any]]:
    issues = []
    for error in exc.errors():
        loc = tuple(str(part) for part in error["loc"])
        line = lines.get(loc[:2]) or lines.get(loc[:1]) or 0
        value = error.get("input")
        issues.append({
            "line": line,
            "field": ".".join(loc),
            "message": error["msg"],
            "input": value if isinstance(value, (str, int, float)) else None,
        })
    return issues


def parse_state_spec(text: str):
    """Validate a CLI state spec such as ``gkp(delta=0.1, l=1, logical=plus)``."""
    fields = _spec_fields(text)
    try:
        return _state_adapter.validate_python(fields)
    except ValidationError as exc:
        issues = _issues(exc, {})
        raise ConfigError(f"Invalid state spec {text.strip()!r}", issues=issues) from exc


def parse_config(text: str) -> RunConfig:
    """
    Parse configuration text into a validated ``RunConfig``.

    Syntax errors raise ``ConfigError`` at the first offending line with its
    column; schema violations are collected and raised together.
    """
    data: Dict[str, Any] = {}
    lines: Dict[Tuple[str, ...], int] = {}
    section: Optional[str] = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        column = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()

        if stripped.startswith("["):
            header = _HEADER.match(stripped)
            if not header:
                raise ConfigError(
                    f"Malformed section header at line {number}",
                    issues=[{"line": number, "column": column, "message": "expected [name]"}],
                )
            section = header.group(1).lower()
            if section not in _SECTIONS:
                raise ConfigError(
                    f"Unknown section [{section}] at line {number}",
                    issues=[{"line": number, "column": column + 1, "message": f"sections: {', '.join(_SECTIONS)}"}],
                )
            continue

        if "=" not in stripped:
            raise ConfigError(
                f"Expected key = value at line {number}",
                issues=[{"line": number, "column": column, "message": "missing '='"}],
            )
        key, value = stripped.split("=", 1)
        key = key.strip()
        value_column = line.index("=") + 2
        if not _KEY.match(key):
            raise ConfigError(
                f"Invalid key {key!r} at line {number}",
                issues=[{"line": number, "column": column, "message": "invalid key"}],
            )

        if section is not None:
            path: Tuple[str, ...] = (section, key)
        elif key in _TOP_LEVEL:
            path = _TOP_LEVEL[key]
        elif "." in key:
            path = tuple(key.split(".", 1))
        else:
            # left for the schema to reject as an unknown field
            path = (key,)

        if path in lines:
            raise ConfigError(
                f"Duplicate key {'.'.join(path)!r} at line {number}",
                issues=[{"line": number, "column": column, "message": f"first set at line {lines[path]}"}],
            )
        lines[path] = number

        if path in _SPEC_KEYS:
            parsed: Any = _spec_fields(value, number, value_column)
        else:
            parsed = _scalar(value)

        target = data
        for part in path[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(
                    f"Key {key!r} at line {number} conflicts with a scalar value",
                    issues=[{"line": number, "column": column, "message": "conflicting key"}],
                )
        target[path[-1]] = parsed

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        issues = _issues(exc, lines)
        raise ConfigError(f"{len(issues)} configuration error(s)", issues=issues) from exc

    logger.debug("Parsed configuration with %d keys", len(lines))
    return config
