"""Unit tests for the YAML and CSV record helpers."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import pytest

from cgenlab.io.records import (
    MISSING,
    format_cell,
    parse_cell,
    read_csv,
    read_yaml,
    write_csv,
    write_yaml,
)

if TYPE_CHECKING:
    from pathlib import Path


@pytest.mark.parametrize(
    ("value", "text"),
    [
        (None, MISSING),
        (math.nan, MISSING),
        (0.1, "0.1"),
        (-15.0, "-15.0"),
        (3, "3"),
        ("a", "a"),
    ],
)
def test_format_cell(value: object, text: str) -> None:
    assert format_cell(value) == text


def test_parse_cell() -> None:
    assert parse_cell(MISSING) is None
    assert parse_cell("0.25") == 0.25
    assert parse_cell(format_cell(1 / 3)) == 1 / 3


def test_yaml_keeps_key_order(tmp_path: Path) -> None:
    path = tmp_path / "sub" / "record.yaml"
    write_yaml(path, {"z": 1, "a": [0.5, None], "m": {"k": "v"}})
    assert list(read_yaml(path)) == ["z", "a", "m"]
    assert read_yaml(path)["a"] == [0.5, None]


def test_csv_fills_missing_cells(tmp_path: Path) -> None:
    path = tmp_path / "table.csv"
    write_csv(path, ["id", "value"], [{"id": 0, "value": 0.5}, {"id": 1}])
    assert path.read_text(encoding="utf-8") == "id,value\n0,0.5\n1,NA\n"
    assert read_csv(path) == [
        {"id": "0", "value": "0.5"},
        {"id": "1", "value": "NA"},
    ]
