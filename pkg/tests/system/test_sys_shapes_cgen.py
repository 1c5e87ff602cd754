"""System test: classification cGen on rings with a realistic budget.

Pipeline:
    gen-data (240 rings) → pretrain generator → pretrain classifier
    → train-cgen → evaluation.yaml

Checks:
- counterfactuals stay closer to their originals than a random image of
  the target class (the cross-class baseline);
- at least half of the held-out counterfactuals fool the classifier;
- the generator reconstructs the source class below the threshold.
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING, Any

import pytest
import yaml

from cgenlab.cli.main import main
from cgenlab.config.constants import ArtifactName, ExitCode
from cgenlab.io.records import read_yaml

if TYPE_CHECKING:
    from pathlib import Path

pytestmark = [
    pytest.mark.system,
    pytest.mark.skipif(
        os.getenv("CGEN_RUN_SYSTEM_TESTS") != "1",
        reason="System tests disabled (set CGEN_RUN_SYSTEM_TESTS=1 to run).",
    ),
]

SEED = 2024
CONFIG: dict[str, Any] = {
    "seed": SEED,
    "data": {"count": 240},
    "model": {"code_dim": 16, "base_channels": 4, "hidden_units": 16},
    "pretrain": {"epochs": 12, "batch_size": 16},
    "training": {"epochs": 24, "batch_size": 16},
}


def _cgen(config: Path, *argv: str) -> None:
    code = main([argv[0], "--config", str(config), *argv[1:]])
    assert code == ExitCode.OK, f"cgen {' '.join(argv)} exited with {code}"


def test_shapes_counterfactuals_beat_the_baseline(tmp_path: Path) -> None:
    config = tmp_path / "run.yml"
    config.write_text(yaml.safe_dump(CONFIG), encoding="utf-8")
    data, gen_dir, clf_dir = tmp_path / "d", tmp_path / "g", tmp_path / "c"
    _cgen(config, "gen-data", "--env", "shapes", "--out", str(data))
    _cgen(config, "pretrain", "--data", str(data), "--out", str(gen_dir))
    _cgen(
        config,
        "pretrain",
        "--role",
        "classifier",
        "--data",
        str(data),
        "--out",
        str(clf_dir),
    )
    resolved = read_yaml(gen_dir / ArtifactName.RESOLVED_CONFIG)
    assert resolved["seed"] == SEED

    model = tmp_path / "m"
    _cgen(
        config,
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
    evaluation = read_yaml(model / ArtifactName.EVALUATION)
    scores = evaluation["evaluation"]
    assert scores["count"] >= 20
    assert scores["mean_l_g"] < scores["baseline_l_g"]
    assert scores["closer_than_baseline"] is True
    assert scores["success_rate"] >= 0.5
