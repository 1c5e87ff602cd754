"""Unit tests for run-config loading and ``--set`` overrides.

Covers:
- an empty or absent file gives the defaults with derived section seeds
- dotted overrides at any depth, parsed as YAML values
- malformed overrides, unknown keys and bad files
- the resolved config written next to the outputs
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest
from pydantic import ValidationError

from cgenlab.autodiff.rng import derive_seed
from cgenlab.cli.config_loader import (
    apply_override,
    load_run_config,
    read_config_file,
    write_resolved_config,
)
from cgenlab.config.constants import CGenMode, EnvName
from cgenlab.errors import ConfigurationError
from cgenlab.io.records import read_yaml
from cgenlab.schemas.payload import RunConfig

if TYPE_CHECKING:
    from pathlib import Path


def test_empty_file_gives_defaults(tmp_path: Path) -> None:
    path = tmp_path / "run.yaml"
    path.write_text("", encoding="utf-8")
    config = load_run_config(path)
    assert config.data.env == EnvName.SHAPES
    assert config.training.weights.mode == CGenMode.CLASSIFICATION
    assert config.pretrain.seed == derive_seed(0, "pretrain") & 0x7FFFFFFF
    assert config.probe.seed != config.training.seed


def test_explicit_seeds_survive_resolution() -> None:
    config = load_run_config(None, ["seed=3", "pretrain.seed=5"])
    assert config.seed == 3
    assert config.pretrain.seed == 5
    assert config.training.seed == derive_seed(3, "training") & 0x7FFFFFFF


def test_file_then_overrides(tmp_path: Path) -> None:
    path = tmp_path / "run.yaml"
    path.write_text(
        "data:\n  env: stones\n  count: 40\ntraining:\n  epochs: 2\n",
        encoding="utf-8",
    )
    config = load_run_config(
        path,
        [
            "training.epochs=4",
            "robustness.goals_deg=[-15, 0, 15]",
            "training.weights.alpha=0.5",
            "paths.out=runs/a",
        ],
    )
    assert config.data.env == EnvName.STONES
    assert config.data.count == 40
    assert config.training.epochs == 4
    assert config.robustness.goals_deg == (-15.0, 0.0, 15.0)
    assert config.training.weights.alpha == 0.5
    assert config.paths.out == "runs/a"


def test_regression_weights_by_override() -> None:
    config = load_run_config(
        None,
        [
            "training.weights.mode=regression",
            "training.weights.beta=0.1",
            "training.weights.gamma=0.1",
        ],
    )
    assert config.training.weights.mode == CGenMode.REGRESSION
    with pytest.raises(ValidationError):
        load_run_config(None, ["training.weights.mode=regression"])


def test_apply_override_edits_in_place() -> None:
    data: dict[str, object] = {"paths": {"out": "x"}}
    apply_override(data, "paths.out=")
    apply_override(data, "model.variational=true")
    assert data == {"paths": {"out": None}, "model": {"variational": True}}
    with pytest.raises(ConfigurationError, match="scalar"):
        apply_override({"seed": 1}, "seed.value=2")


@pytest.mark.parametrize(
    "override",
    ["training", "=3", "training..epochs=1", "training.epochs=[1"],
)
def test_malformed_overrides(override: str) -> None:
    with pytest.raises(ConfigurationError):
        load_run_config(None, [override])


def test_unknown_keys_are_rejected() -> None:
    with pytest.raises(ValidationError):
        load_run_config(None, ["training.bogus=1"])
    with pytest.raises(ValidationError):
        load_run_config(None, ["data.env=mnist"])


def test_bad_config_files(tmp_path: Path) -> None:
    with pytest.raises(ConfigurationError, match="not found"):
        read_config_file(tmp_path / "missing.yaml")
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="mapping"):
        read_config_file(listing)


def test_resolved_config_round_trips(tmp_path: Path) -> None:
    config = load_run_config(None, ["seed=11", "robustness.goals_deg=[0]"])
    path = write_resolved_config(config, tmp_path)
    assert path.name == "resolved_config.yaml"
    again = RunConfig.model_validate(read_yaml(path))
    assert again == config
    assert again.resolved() == config
