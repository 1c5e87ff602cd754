"""
Evaluation of trained counterfactual generators.

Classification runs are scored by how often the counterfactual crosses the
classifier's decision threshold and by how close it stays to its original,
compared against the distance between random pairs of real images from the
two classes. Stepping-stones runs are scored by re-executing the oracle
controller on the scene extracted from each counterfactual image.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.autodiff.rng import make_rng
from cgenlab.cgen.training import (
    CGenTrainingResult,
    train_cgen_classification,
)
from cgenlab.config.constants import StonesDefaults
from cgenlab.envs.stones import extract_stones_scene, stones_oracle
from cgenlab.errors import DimensionError, EmptyDatasetError, SceneExtractionError
from cgenlab.nn.checkpoint import clone_model
from cgenlab.schemas.training.cgen import CGenWeights

if TYPE_CHECKING:
    from collections.abc import Sequence

    from cgenlab.nn.models import ClassifierModel, GeneratorModel, PredictorModel
    from cgenlab.schemas.training.cgen import TrainConfig

logger = logging.getLogger(__name__)

_DECISION = 0.5


def forward_counterfactuals(
    generator: GeneratorModel,
    images: np.ndarray,
    batch_size: int = 64,
) -> np.ndarray:
    """Counterfactuals of a trained generator, batch by batch."""
    chunks = [
        generator.reconstruct(images[start : start + batch_size])
        for start in range(0, len(images), batch_size)
    ]
    if not chunks:
        msg = "no images to transform"
        raise EmptyDatasetError(msg)
    return np.concatenate(chunks).astype(np.float32)


def _per_sample_mse(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return np.mean(diff.reshape(diff.shape[0], -1) ** 2, axis=1)


def cross_class_baseline(
    originals: np.ndarray,
    contrast: np.ndarray,
    seed: int,
) -> float:
    """Mean mse over random (original, other-class) pairs, one per original."""
    rng = make_rng(seed, "evaluation", "baseline")
    picks = rng.integers(0, len(contrast), size=len(originals))
    return float(np.mean(_per_sample_mse(originals, contrast[picks])))


@dataclass(frozen=True)
class ClassificationSummary:
    """Outcome of a classification run on held-out originals."""

    count: int
    success_rate: float
    mean_l_g: float
    mean_l_c: float
    baseline_l_g: float

    @property
    def closer_than_baseline(self) -> bool:
        """Counterfactuals stay nearer to their originals than a class swap."""
        return self.mean_l_g < self.baseline_l_g


def evaluate_classification(  # noqa: PLR0913
    generator: GeneratorModel,
    classifier: ClassifierModel,
    originals: np.ndarray,
    contrast: np.ndarray,
    *,
    seed: int = 0,
    counterfactuals: np.ndarray | None = None,
) -> ClassificationSummary:
    """
    Score counterfactuals of ``originals``.

    Args:
        generator: trained cGen generator (ignored when ``counterfactuals``
            are supplied, e.g. after denoising).
        classifier: scores membership of the target class.
        originals: held-out images of the source class.
        contrast: real images of the target class for the baseline.
        seed: seed of the baseline pairing.
        counterfactuals: precomputed counterfactuals of ``originals``.

    """
    if len(originals) == 0 or len(contrast) == 0:
        msg = "evaluation needs originals and contrast images"
        raise EmptyDatasetError(msg)
    produced = (
        counterfactuals
        if counterfactuals is not None
        else forward_counterfactuals(generator, originals)
    )
    if produced.shape != originals.shape:
        msg = f"counterfactuals {produced.shape} do not match {originals.shape}"
        raise DimensionError(msg)
    prob = classifier.predict(produced).reshape(-1).astype(np.float64)
    return ClassificationSummary(
        count=len(originals),
        success_rate=float(np.mean(prob > _DECISION)),
        mean_l_g=float(np.mean(_per_sample_mse(originals, produced))),
        mean_l_c=float(np.mean((prob - 1.0) ** 2)),
        baseline_l_g=cross_class_baseline(originals, contrast, seed),
    )


@dataclass(frozen=True)
class AlphaSweepPoint:
    """One α of a sweep with its trained run and its held-out summary."""

    alpha: float
    summary: ClassificationSummary
    run: CGenTrainingResult


def alpha_sweep(  # noqa: PLR0913
    alphas: Sequence[float],
    generator: GeneratorModel,
    classifier: ClassifierModel,
    originals: np.ndarray,
    target_images: np.ndarray,
    validation: tuple[np.ndarray, np.ndarray],
    *,
    config: TrainConfig,
) -> list[AlphaSweepPoint]:
    """
    Repeat classification training at every ``alpha``.

    Each run starts from its own copy of the same pre-trained generator and
    classifier, with the same seed and budget, so only ``alpha`` differs.
    ``validation`` is ``(held-out originals, held-out target-class images)``.
    """
    points: list[AlphaSweepPoint] = []
    held_originals, held_targets = validation
    for alpha in alphas:
        run_config = config.model_copy(
            update={"weights": CGenWeights.classification(alpha)},
        )
        g = clone_model(generator)
        c = clone_model(classifier)
        run = train_cgen_classification(
            g,  # type: ignore[arg-type]
            c,  # type: ignore[arg-type]
            originals,
            target_images,
            config=run_config,
        )
        summary = evaluate_classification(
            run.generator,
            run.classifier,
            held_originals,
            held_targets,
            seed=config.seed,
        )
        logger.info(
            "alpha %.2f: success %.3f, l_g %.4g, l_c %.4g",
            alpha,
            summary.success_rate,
            summary.mean_l_g,
            summary.mean_l_c,
        )
        points.append(AlphaSweepPoint(alpha=alpha, summary=summary, run=run))
    return points


@dataclass(frozen=True)
class StonesReexecution:
    """Oracle re-execution of stepping-stones counterfactuals."""

    residuals: list[float | None]
    l_p_original: np.ndarray
    l_p_counterfactual: np.ndarray
    failures: list[str] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        """Share of counterfactual scenes whose target the oracle reaches."""
        hits = [r == 0.0 for r in self.residuals]
        return float(np.mean(hits)) if hits else 0.0

    @property
    def improvement_rate(self) -> float:
        """Share of samples where the surrogate loss went down."""
        return float(np.mean(self.l_p_counterfactual < self.l_p_original))

    @property
    def median_improved(self) -> bool:
        """Median surrogate loss is strictly lower after the counterfactual."""
        return bool(
            np.median(self.l_p_counterfactual) < np.median(self.l_p_original),
        )


def reexecute_stones(
    originals: np.ndarray,
    counterfactuals: np.ndarray,
    *,
    predictor: PredictorModel,
    goal: float = 0.0,
    delta: float = StonesDefaults.DELTA,
) -> StonesReexecution:
    """
    Extract a scene from every counterfactual and run the oracle on it.

    Images from which no scene can be recovered count as failures (residual
    ``None``). ``l_p`` is the surrogate's squared distance from ``goal``.
    """
    if originals.shape != counterfactuals.shape:
        msg = f"{originals.shape} originals but {counterfactuals.shape} counterfactuals"
        raise DimensionError(msg)
    residuals: list[float | None] = []
    failures: list[str] = []
    for index, image in enumerate(counterfactuals):
        try:
            scene = extract_stones_scene(image.reshape(image.shape[-2:]), delta)
        except (SceneExtractionError, ValueError) as exc:
            residuals.append(None)
            failures.append(f"sample {index}: {exc}")
            continue
        residuals.append(stones_oracle(scene))
    if failures:
        logger.warning("%d counterfactual scenes could not be extracted", len(failures))

    def l_p(images: np.ndarray) -> np.ndarray:
        out = predictor.predict(images).astype(np.float64)
        return np.mean((out - goal) ** 2, axis=1)

    return StonesReexecution(
        residuals=residuals,
        l_p_original=l_p(originals),
        l_p_counterfactual=l_p(counterfactuals),
        failures=failures,
    )
