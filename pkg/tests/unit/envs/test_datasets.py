"""Unit tests for dataset generation and dataset directories.

Covers:
- class balance, split tags and label widths of the three generators
- determinism: same seed same bytes, independent of the worker count
- write/load through PGM files, manifest validation, regeneration
- the straight-line navigation goal
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest
from pydantic import ValidationError

from cgenlab.config.constants import ArtifactName, DatasetSplit, EnvName
from cgenlab.envs.datasets import (
    generate_dataset,
    load_dataset,
    load_manifest,
    regenerate,
    write_dataset,
)
from cgenlab.envs.nav import goal_from_angle
from cgenlab.errors import ConfigurationError, MissingPrerequisiteError
from cgenlab.io.records import read_csv, read_yaml, write_yaml

if TYPE_CHECKING:
    from pathlib import Path

PGM_TOL = 0.5 / 255 + 1e-6


# --------------------------------------------------------------------------- #
# Generation                                                                  #
# --------------------------------------------------------------------------- #


def test_shapes_classes_alternate_and_validation_trails() -> None:
    data = generate_dataset("shapes", 10, seed=3)
    assert data.images.shape == (10, 1, 32, 32)
    assert data.images.dtype == np.float32
    labels = [e.label[0] for e in data.manifest.entries]
    assert labels == [1.0, 0.0] * 5
    splits = [e.split for e in data.manifest.entries]
    assert splits == [DatasetSplit.TRAIN] * 9 + [DatasetSplit.VALIDATION]
    assert float(data.images.min()) >= 0.0
    assert float(data.images.max()) <= 1.0


def test_generation_is_deterministic_and_worker_independent() -> None:
    one = generate_dataset(EnvName.STONES, 12, seed=5, workers=1)
    many = generate_dataset(EnvName.STONES, 12, seed=5, workers=4)
    np.testing.assert_array_equal(one.images, many.images)
    assert one.manifest == many.manifest
    other = generate_dataset(EnvName.STONES, 12, seed=6)
    assert not np.array_equal(one.images, other.images)


def test_stones_records_its_parameters() -> None:
    data = generate_dataset("stones", 20, seed=1, delta=0.3, augment=True)
    assert data.manifest.params == {"delta": 0.3, "augment": True}
    residuals = np.array([e.label[0] for e in data.manifest.entries])
    assert np.all(residuals >= 0.0)
    assert np.all((residuals == 0.0) | (residuals > 0.3))
    plain = generate_dataset("stones", 20, seed=1, delta=0.3)
    assert not np.array_equal(data.images, plain.images)


def test_empty_nav_world() -> None:
    data = generate_dataset("nav", 3, seed=0, complexity="empty")
    assert data.images.shape == (3, 1, 64, 64)
    assert data.manifest.params == {"complexity": "empty"}
    for entry in data.manifest.entries:
        assert len(entry.label) == 10
        assert not entry.has_barrier
        assert entry.split == DatasetSplit.TRAIN


def test_unknown_environment_and_empty_count() -> None:
    with pytest.raises(ConfigurationError, match="shapes, stones, nav"):
        generate_dataset("mnist", 4, seed=0)
    with pytest.raises(ConfigurationError):
        generate_dataset("shapes", 0, seed=0)


# --------------------------------------------------------------------------- #
# Directories                                                                 #
# --------------------------------------------------------------------------- #


def test_write_then_load(tmp_path: Path) -> None:
    data = generate_dataset("stones", 10, seed=2)
    root = write_dataset(data, tmp_path / "stones")
    assert (root / ArtifactName.MANIFEST).is_file()
    rows = read_csv(root / ArtifactName.LABELS)
    assert len(rows) == 10
    assert list(rows[0]) == ["file", "split", "label_0", "has_barrier"]

    loaded = load_dataset(root)
    assert len(loaded) == 10
    assert loaded.images.shape == data.images.shape
    np.testing.assert_allclose(loaded.images, data.images, atol=PGM_TOL)
    expected = np.array([e.label for e in data.manifest.entries])
    np.testing.assert_array_equal(loaded.labels, expected)
    assert loaded.manifest == data.manifest


def test_split_and_select(tmp_path: Path) -> None:
    root = write_dataset(generate_dataset("shapes", 20, seed=0), tmp_path / "s")
    loaded = load_dataset(root)
    train = loaded.split(DatasetSplit.TRAIN)
    validation = loaded.split(DatasetSplit.VALIDATION)
    assert (len(train), len(validation)) == (18, 2)
    ones = loaded.select(loaded.labels[:, 0] == 1.0)
    assert len(ones) == 10
    assert ones.manifest.count == 10
    assert all(e.label == (1.0,) for e in ones.manifest.entries)


def test_regenerate_from_manifest(tmp_path: Path) -> None:
    data = generate_dataset("stones", 8, seed=9, delta=0.28, augment=True)
    root = write_dataset(data, tmp_path / "d")
    again = regenerate(load_manifest(root))
    np.testing.assert_array_equal(again.images, data.images)
    assert again.manifest == data.manifest


def test_missing_and_invalid_manifest(tmp_path: Path) -> None:
    with pytest.raises(MissingPrerequisiteError):
        load_dataset(tmp_path / "nowhere")

    root = write_dataset(generate_dataset("shapes", 4, seed=0), tmp_path / "bad")
    document = read_yaml(root / ArtifactName.MANIFEST)
    document["count"] = 5
    write_yaml(root / ArtifactName.MANIFEST, document)
    with pytest.raises(ConfigurationError, match="lists 4"):
        load_manifest(root)


# --------------------------------------------------------------------------- #
# Navigation goals                                                            #
# --------------------------------------------------------------------------- #


def test_straight_goal_points_forward() -> None:
    goal = goal_from_angle(0.0)
    assert goal.shape == (10,)
    np.testing.assert_allclose(goal[0::2], 0.0, atol=1e-12)
    np.testing.assert_allclose(goal[1::2], [0.2, 0.4, 0.6, 0.8, 1.0])


def test_angled_goal_keeps_constant_speed() -> None:
    goal = goal_from_angle(-30.0).reshape(5, 2)
    steps = np.diff(np.vstack([[0.0, 0.0], goal]), axis=0)
    np.testing.assert_allclose(np.hypot(steps[:, 0], steps[:, 1]), 0.2)
    assert np.all(goal[:, 0] < 0.0)


@pytest.mark.parametrize("angle", [-45.5, 60.0])
def test_goal_angle_range(angle: float) -> None:
    with pytest.raises(ValidationError):
        goal_from_angle(angle)
