"""Plain-text key=value configuration.

One `key = value` pair per line, `#` comments, values kept as strings;
commands coerce what they use. Command-line flags override file entries.
"""

from __future__ import annotations

from .errors import InputError

__all__ = ["parse_config", "serialize_config", "read_config"]


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise InputError(f"config line {lineno}: empty key")
        out[key] = value.strip()
    return out


def serialize_config(cfg: dict) -> str:
    return "".join(f"{key} = {cfg[key]}\n" for key in sorted(cfg))


def read_config(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
