"""Unit tests for the public import surface.

Verifies that:
- `cgenlab`, `cgenlab.enums` and `cgenlab.settings` expose the expected
  `__all__`.
- Every name listed in a package `__all__` resolves to an attribute.
"""

from __future__ import annotations

import importlib
from enum import Enum
from typing import TYPE_CHECKING

import pytest
from pydantic import BaseModel

from cgenlab.enums import CGenMode, EnvName, ExitCode, Verdict
from cgenlab.settings import CgenSettings, RunConfig

if TYPE_CHECKING:
    from collections.abc import Iterable


def _assert_all_equals(module_name: str, expected: Iterable[str]) -> None:
    """Assert that a module's __all__ exactly matches `expected`."""
    mod = importlib.import_module(module_name)
    assert hasattr(mod, "__all__"), f"{module_name} is missing __all__"
    assert set(mod.__all__) == set(expected), (
        f"{module_name}.__all__ mismatch:\n"
        f"  expected: {set(expected)}\n"
        f"  actual:   {set(mod.__all__)}"
    )


def test_facade_public_symbols() -> None:
    """`cgenlab` exposes the pipeline entry points."""
    _assert_all_equals(
        "cgenlab",
        [
            "generate_dataset",
            "latent_counterfactual_search",
            "load_dataset",
            "robustness_compare",
            "train_cgen_classification",
            "train_cgen_regression",
        ],
    )


def test_settings_public_symbols() -> None:
    """`cgenlab.settings` exposes the runtime settings and the run config."""
    _assert_all_equals("cgenlab.settings", ["CgenSettings", "RunConfig"])
    for cls in (CgenSettings, RunConfig):
        assert isinstance(cls, type)
        assert issubclass(cls, BaseModel)


def test_enums_are_enums() -> None:
    """Public enums are importable Enum subclasses with stable values."""
    for cls in (CGenMode, EnvName, ExitCode, Verdict):
        assert issubclass(cls, Enum)
    assert ExitCode.MISSING_PREREQUISITE == 4
    assert [e.value for e in EnvName] == ["shapes", "stones", "nav"]


@pytest.mark.parametrize(
    "module_name",
    [
        "cgenlab",
        "cgenlab.autodiff",
        "cgenlab.cgen",
        "cgenlab.enums",
        "cgenlab.envs",
        "cgenlab.nn",
        "cgenlab.robustness",
        "cgenlab.settings",
    ],
)
def test_all_names_resolve(module_name: str) -> None:
    """Every name in `__all__` is an attribute of its package."""
    mod = importlib.import_module(module_name)
    missing = [name for name in mod.__all__ if not hasattr(mod, name)]
    assert missing == []
