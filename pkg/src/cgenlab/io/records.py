"""YAML documents and CSV tables shared by every pipeline stage."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

import yaml

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

MISSING = "NA"


def format_cell(value: object) -> str:
    """Shortest round-tripping text of a cell; ``None`` and NaN become ``NA``."""
    if value is None:
        return MISSING
    if isinstance(value, float):
        return MISSING if math.isnan(value) else repr(float(value))
    return str(value)


def parse_cell(text: str) -> float | None:
    """Inverse of ``format_cell`` for numeric cells."""
    return None if text == MISSING else float(text)


def write_yaml(path: str | Path, data: Mapping[str, Any]) -> None:
    """Dump ``data`` as block-style YAML, keys in insertion order."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as fh:
        yaml.safe_dump(dict(data), fh, sort_keys=False, default_flow_style=False)


def read_yaml(path: str | Path) -> Any:  # noqa: ANN401
    """Load one YAML document."""
    with Path(path).open(encoding="utf-8") as fh:
        return yaml.safe_load(fh)


def write_csv(
    path: str | Path,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, object]],
) -> None:
    """Write ``rows`` under a header line with ``\\n`` line endings."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: format_cell(row.get(k)) for k in fieldnames})


def read_csv(path: str | Path) -> list[dict[str, str]]:
    """Rows as dictionaries of raw strings."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
