"""Shared fixtures used by the end-to-end pipeline tests."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from cgenlab.cli.main import main
from cgenlab.config.constants import ExitCode

if TYPE_CHECKING:
    from collections.abc import Callable

TINY_CONFIG = Path(__file__).parent / "pipelines" / "data" / "tiny.yml"


# --------------------------------------------------------------------------- #
# CLI runner                                                                  #
# --------------------------------------------------------------------------- #
@pytest.fixture
def cgen() -> Callable[..., int]:
    """
    Factory running one ``cgen`` command with the tiny run config.

    Usage inside a test::

        cgen("gen-data", "--env", "shapes", "--out", str(tmp_path / "d"))
        code = cgen("train-cgen", ..., expect=None)

    The exit code is asserted to be ``expect`` unless ``expect`` is ``None``.
    """

    def _run(*argv: str, expect: int | None = ExitCode.OK) -> int:
        code = main([argv[0], "--config", str(TINY_CONFIG), *argv[1:]])
        if expect is not None:
            assert code == expect, f"cgen {' '.join(argv)} exited with {code}"
        return code

    return _run
