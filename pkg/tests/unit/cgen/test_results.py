"""Unit tests for counterfactual records and their directory layout."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from cgenlab.cgen.results import CounterfactualResult, load_losses, save_result
from cgenlab.config.constants import ArtifactName
from cgenlab.io.pgm import read_pgm
from cgenlab.schemas.training.cgen import CGenWeights

if TYPE_CHECKING:
    from pathlib import Path


def _result(**overrides: object) -> CounterfactualResult:
    image = np.linspace(0.0, 1.0, 16).reshape(1, 4, 4)
    fields: dict[str, object] = {
        "original": image,
        "counterfactual": image.copy(),
        "losses": {"l_g": 0.0, "l_c": 0.25, "l_total": 0.2},
        "weights": CGenWeights.classification(0.8),
        "classifier_prob": 0.5,
    }
    fields.update(overrides)
    return CounterfactualResult(**fields)  # type: ignore[arg-type]


def test_total_matches_the_weighted_components() -> None:
    assert _result().total_matches()
    assert _result().recomputed_total() == pytest.approx(0.2)
    tampered = _result(losses={"l_g": 0.0, "l_c": 0.25, "l_total": 0.3})
    assert not tampered.total_matches()
    silent = _result(losses={"l_g": 0.0, "l_c": 0.0, "l_total": 0.0})
    assert silent.total_matches()


def test_record_drops_unset_fields() -> None:
    record = _result().record()
    assert record["weights"] == {"mode": "classification", "alpha": 0.8}
    assert "prediction" not in record
    assert "goal" not in record
    assert "optimized_variables" not in record

    regression = _result(
        losses={"l_g": 0.1, "l_c": 0.2, "l_p": 0.3, "l_total": 0.13},
        weights=CGenWeights.regression(0.5, 0.2, 0.1),
        prediction=np.array([0.4]),
        goal=np.array([0.0]),
        optimized_variables=3,
    ).record()
    assert regression["prediction"] == [0.4]
    assert regression["goal"] == [0.0]
    assert regression["optimized_variables"] == 3


def test_save_result_layout(tmp_path: Path) -> None:
    result = _result()
    out = save_result(result, tmp_path / "cf", extra={"dataset": "shapes"})
    for name in (
        ArtifactName.ORIGINAL,
        ArtifactName.COUNTERFACTUAL,
        ArtifactName.DIFF,
        ArtifactName.LOSSES,
    ):
        assert (out / name).is_file()

    diff_bytes = (out / ArtifactName.DIFF).read_bytes()
    assert diff_bytes.endswith(bytes([128]) * 16)
    np.testing.assert_allclose(
        read_pgm(out / ArtifactName.ORIGINAL),
        result.original[0],
        atol=0.5 / 255 + 1e-6,
    )

    record = load_losses(out)
    assert record["dataset"] == "shapes"
    assert record["losses"]["l_c"] == 0.25
    assert record["converged"] is True
