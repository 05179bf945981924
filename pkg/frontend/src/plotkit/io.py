"""CSV access for the documented adiabat report schema."""

from __future__ import annotations

import csv
from pathlib import Path


class PlotkitError(Exception):
    pass


class SchemaError(PlotkitError):
    """An input file is missing a required column."""


def read_table(path: Path) -> dict:
    """Read one CSV into {column: list of floats-or-strings}."""
    path = Path(path)
    if not path.exists():
        raise PlotkitError(f"input file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path.name}: empty file")
        columns = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in reader.fieldnames:
                value = row[name]
                try:
                    columns[name].append(float(value))
                except (TypeError, ValueError):
                    columns[name].append(value)
    return columns


def require_columns(table: dict, path: Path, names) -> None:
    missing = [n for n in names if n not in table]
    if missing:
        raise SchemaError(
            f"{Path(path).name}: missing column(s) {', '.join(missing)}")


def decode_slug(slug: str) -> float:
    """Invert the parameter tag used in distribution file names."""
    return float(slug.replace("p", ".").replace("m", "-"))
