"""
End-to-end classification pipeline through the ``cgen`` command line.

gen-data (shapes) → pretrain generator / classifier → train-cgen →
counterfactual, plus the exit codes of mismatched goals and a missing
model directory.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from cgenlab.config.constants import ArtifactName, ExitCode
from cgenlab.io.pgm import read_pgm
from cgenlab.io.records import read_csv, read_yaml
from cgenlab.schemas.training.cgen import CGenWeights

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path


@pytest.mark.integration
def test_classification_pipeline(cgen: Callable[..., int], tmp_path: Path) -> None:
    """Every stage writes its artifacts and the counterfactual is consistent."""
    data = tmp_path / "shapes"
    cgen("gen-data", "--env", "shapes", "--seed", "4", "--out", str(data))
    gen_dir, clf_dir = tmp_path / "gen", tmp_path / "clf"
    cgen("pretrain", "--role", "generator", "--data", str(data), "--out", str(gen_dir))
    cgen("pretrain", "--role", "classifier", "--data", str(data), "--out", str(clf_dir))
    assert (gen_dir / ArtifactName.GENERATOR).is_file()
    assert (clf_dir / ArtifactName.CLASSIFIER).is_file()

    model = tmp_path / "model"
    cgen(
        "train-cgen",
        "--data",
        str(data),
        "--set",
        f"paths.generator={gen_dir / ArtifactName.GENERATOR}",
        "--set",
        f"paths.classifier={clf_dir / ArtifactName.CLASSIFIER}",
        "--out",
        str(model),
    )
    log = read_csv(model / ArtifactName.TRAINING_LOG)
    assert [row["epoch"] for row in log] == ["0", "1"]
    assert log[0]["l_p"] == "NA"
    evaluation = read_yaml(model / ArtifactName.EVALUATION)
    assert evaluation["mode"] == "classification"
    assert evaluation["flags"]["classifier_pretrained"] is True
    assert 0.0 <= evaluation["evaluation"]["success_rate"] <= 1.0
    assert evaluation["evaluation"]["baseline_l_g"] > 0.0

    out = tmp_path / "cf"
    source = data / "sample_000001.pgm"
    cgen(
        "counterfactual",
        "--model",
        str(model),
        "--input",
        str(source),
        "--goal",
        "class:1",
        "--out",
        str(out),
    )
    original = read_pgm(out / ArtifactName.ORIGINAL)
    np.testing.assert_array_equal(original, read_pgm(source))
    assert read_pgm(out / ArtifactName.COUNTERFACTUAL).shape == original.shape
    record = read_yaml(out / ArtifactName.LOSSES)
    assert record["mode"] == "classification"
    weights = CGenWeights.model_validate(record["weights"])
    losses = record["losses"]
    assert weights.combine(losses["l_g"], losses["l_c"]) == pytest.approx(
        losses["l_total"],
        rel=1e-5,
    )
    assert isinstance(record["changed_regions"], list)


@pytest.mark.integration
def test_classification_exit_codes(cgen: Callable[..., int], tmp_path: Path) -> None:
    """A goal the model was not trained towards is a configuration error."""
    data = tmp_path / "shapes"
    cgen("gen-data", "--env", "shapes", "--count", "8", "--out", str(data))
    gen_dir = tmp_path / "gen"
    cgen("pretrain", "--data", str(data), "--out", str(gen_dir))
    # no predictor.ckpt: the directory is a classification model
    argv = [
        "counterfactual",
        "--model",
        str(gen_dir),
        "--input",
        str(data / "sample_000000.pgm"),
        "--goal",
        "angle:0",
        "--out",
        str(tmp_path / "cf"),
    ]
    assert cgen(*argv, expect=None) == ExitCode.CONFIG_ERROR
    # pre-trained towards the default target class 1
    argv[6] = "class:0"
    assert cgen(*argv, expect=None) == ExitCode.CONFIG_ERROR
    argv[2] = str(tmp_path / "missing")
    assert cgen(*argv, expect=None) == ExitCode.MISSING_PREREQUISITE
