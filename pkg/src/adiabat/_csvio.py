"""Deterministic CSV/JSON serialization: 17-significant-digit floats,
LF line endings, UTF-8, sorted JSON keys, no timestamps inside data files."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8", newline="\n")


def sha256_of(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def a_slug(a: float) -> str:
    """Filesystem-safe tag for a parameter value (used in file names)."""
    return format(a, ".6g").replace("-", "m").replace(".", "p").replace("+", "")
