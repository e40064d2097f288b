"""Plain-text (TOML) experiment configuration with strict key checking.

Every subcommand owns a table of defaults; a user file may only override keys
that exist in that table.  Unknown keys and type mismatches raise
:class:`~symplab.errors.ConfigError` carrying the offending line and field.
"""
from __future__ import annotations

import copy
import re

import tomli
import tomli_w

from .errors import ConfigError

# Tables whose contents are free-form (validated later by the consumer, e.g.
# ``map_from_config``) rather than against the defaults.
FREEFORM = {"map", "model"}


def _line_of(text, field):
    """Best-effort 1-based line number where ``field`` (last dotted component) is assigned."""
    if text is None or field is None:
        return None
    key = field.split(".")[-1]
    pat = re.compile(r"^\s*(\"?)" + re.escape(key) + r"\1\s*=")
    header = re.compile(r"^\s*\[+\s*" + re.escape(field) + r"\s*\]+")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line) or header.match(line):
            return i
    return None


def parse_text(text):
    """Parse TOML ``text``; syntax errors become :class:`ConfigError` with the line number."""
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from None


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_text(text), text


def _type_ok(default, value):
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    if default is None:
        return True
    return True


def merge(defaults, user, text=None, prefix=""):
    """Return ``defaults`` updated by ``user``; unknown keys or wrong types are errors."""
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        field = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown key '{key}'", field=field, line=_line_of(text, field))
        default = defaults[key]
        if key in FREEFORM:
            if not isinstance(value, dict):
                raise ConfigError("expected a table", field=field, line=_line_of(text, field))
            out[key] = copy.deepcopy(value)
        elif isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError("expected a table", field=field, line=_line_of(text, field))
            out[key] = merge(default, value, text, prefix=field + ".")
        elif not _type_ok(default, value):
            raise ConfigError(
                f"expected {type(default).__name__}, got {type(value).__name__}",
                field=field,
                line=_line_of(text, field),
            )
        else:
            out[key] = float(value) if isinstance(default, float) else copy.deepcopy(value)
    return out


def dumps(config):
    """Serialize a config table to TOML (``None`` entries are omitted)."""

    def strip(d):
        return {k: strip(v) if isinstance(v, dict) else v for k, v in d.items() if v is not None}

    return tomli_w.dumps(strip(config))
