"""Counterfactual records and their on-disk form."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from cgenlab.config.constants import ArtifactName
from cgenlab.io.pgm import diff_to_image, write_pgm
from cgenlab.io.records import read_yaml, write_yaml
from cgenlab.schemas.training.cgen import CGenWeights

logger = logging.getLogger(__name__)


@dataclass
class CounterfactualResult:
    """
    One original image, its counterfactual and the losses between them.

    ``losses`` holds ``l_g``, ``l_c``, ``l_total`` and, in regression mode,
    ``l_p``. ``l_total`` is the weighted combination of the components under
    ``weights``.
    """

    original: np.ndarray
    counterfactual: np.ndarray
    losses: dict[str, float]
    weights: CGenWeights
    classifier_prob: float
    prediction: np.ndarray | None = None
    goal: np.ndarray | None = None
    iterations: int = 0
    converged: bool = True
    optimized_variables: int = 0
    best_history: list[float] = field(default_factory=list)

    def recomputed_total(self) -> float:
        """Weighted total rebuilt from the stored components."""
        return self.weights.combine(
            self.losses["l_g"],
            self.losses["l_c"],
            self.losses.get("l_p", 0.0),
        )

    def total_matches(self, rtol: float = 1e-6) -> bool:
        """Whether ``l_total`` reproduces the weighted components."""
        stored = self.losses["l_total"]
        again = self.recomputed_total()
        scale = max(abs(stored), abs(again))
        return scale == 0 or abs(stored - again) / scale <= rtol

    def record(self) -> dict[str, Any]:
        """Structured form written next to the images."""
        data: dict[str, Any] = {
            "losses": {k: float(v) for k, v in self.losses.items()},
            "weights": self.weights.model_dump(mode="json", exclude_none=True),
            "classifier_prob": float(self.classifier_prob),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }
        if self.prediction is not None:
            data["prediction"] = [float(v) for v in np.ravel(self.prediction)]
        if self.goal is not None:
            data["goal"] = [float(v) for v in np.ravel(self.goal)]
        if self.optimized_variables:
            data["optimized_variables"] = int(self.optimized_variables)
        return data


def _plane(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    return arr.reshape(arr.shape[-2:])


def save_result(
    result: CounterfactualResult,
    out_dir: str | Path,
    *,
    extra: dict[str, Any] | None = None,
) -> Path:
    """Write original, counterfactual and diff PGMs plus ``losses.yaml``."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    original = _plane(result.original)
    counterfactual = _plane(result.counterfactual)
    write_pgm(target / ArtifactName.ORIGINAL, original)
    write_pgm(target / ArtifactName.COUNTERFACTUAL, counterfactual)
    write_pgm(target / ArtifactName.DIFF, diff_to_image(counterfactual - original))
    record = result.record()
    if extra:
        record.update(extra)
    write_yaml(target / ArtifactName.LOSSES, record)
    logger.info("wrote counterfactual to %s", target)
    return target


def load_losses(out_dir: str | Path) -> dict[str, Any]:
    """Read back the structured record of a saved counterfactual."""
    data: dict[str, Any] = read_yaml(Path(out_dir) / ArtifactName.LOSSES)
    return data
