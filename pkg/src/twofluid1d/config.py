"""Flat key = value run configuration with CLI-style overrides.

The format is a plain text file of `key = value` lines; blank lines and
`#` comments are ignored.  Overrides (from command-line flags) always win
over file values, which win over defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping

__all__ = ["ParseError", "ValidationError", "RunConfig", "parse_config", "serialize_config"]


class ParseError(Exception):
    """Malformed configuration text; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(Exception):
    """A configuration value outside its admissible range; names the key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run parameters with defaults filled in."""

    scenario: str = "smooth-bump"
    n_cells: int = 200
    t_end: float = 20.0
    cfl: float = 0.4
    mu: float = 1.0
    gamma_plus: float = 2.0
    gamma_minus: float = 1.5
    cadence: float = 0.05
    out: str = "."
    seed: int = 0


_INT_KEYS = {"n_cells", "seed"}
_FLOAT_KEYS = {"t_end", "cfl", "mu", "gamma_plus", "gamma_minus", "cadence"}
_STR_KEYS = {"scenario", "out"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _coerce(key: str, raw: str, line: int | None):
    def fail(msg: str):
        if line is None:
            raise ValidationError(key, msg)
        raise ParseError(f"{key}: {msg}", line)

    if key in _STR_KEYS:
        return raw
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            fail(f"expected an integer, got {raw!r}")
    try:
        return float(raw)
    except ValueError:
        fail(f"expected a number, got {raw!r}")


def _validate(cfg: RunConfig) -> RunConfig:
    from .scenarios import SCENARIOS

    if cfg.scenario not in SCENARIOS:
        raise ValidationError(
            "scenario",
            f"unknown scenario {cfg.scenario!r}; registered: {sorted(SCENARIOS)}",
        )
    if cfg.n_cells < 2:
        raise ValidationError("n_cells", "must be at least 2")
    if cfg.t_end < 0.0:
        raise ValidationError("t_end", "must be nonnegative")
    if not 0.0 < cfg.cfl < 1.0:
        raise ValidationError("cfl", "must lie in (0, 1)")
    if cfg.mu <= 0.0:
        raise ValidationError("mu", "must be positive")
    if cfg.gamma_plus <= 1.0:
        raise ValidationError("gamma_plus", "adiabatic exponent must exceed 1")
    if cfg.gamma_minus <= 1.0:
        raise ValidationError("gamma_minus", "adiabatic exponent must exceed 1")
    if cfg.cadence <= 0.0:
        raise ValidationError("cadence", "must be positive")
    return cfg


def parse_config(
    text: str = "", overrides: Mapping[str, object] | None = None
) -> RunConfig:
    """Parse `key = value` text, apply overrides, validate, fill defaults."""
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if not raw:
            raise ParseError(f"empty value for {key!r}", lineno)
        values[key] = _coerce(key, raw, lineno)
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in _ALL_KEYS:
                raise ValidationError(key, "unknown key")
            values[key] = _coerce(key, str(val), None)
    return _validate(RunConfig(**values))


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        rendered = value if isinstance(value, str) else repr(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
