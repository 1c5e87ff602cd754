"""
Controller family trained at different demonstration complexities.

Every controller shares the architecture, the initial weights, the budget
and the batch order; only the training data differs. Tags follow the order
of the datasets: ``a`` is trained on the richest scenes, ``c`` on empty ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from cgenlab.cgen.training import TrainingLog, predictor_mse, train_predictor
from cgenlab.config.constants import DatasetSplit, ModelKind, RobustnessDefaults
from cgenlab.errors import (
    ConfigurationError,
    EmptyDatasetError,
    UnsupportedOperationError,
)
from cgenlab.nn.architectures import build_predictor
from cgenlab.nn.checkpoint import load_checkpoint, save_checkpoint
from cgenlab.nn.models import PredictorModel

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from cgenlab.envs.datasets import LoadedDataset
    from cgenlab.schemas.payload import ModelSection
    from cgenlab.schemas.training.cgen import PretrainConfig

logger = logging.getLogger(__name__)


def controller_file(tag: str) -> str:
    """Checkpoint name of the controller tagged ``tag``."""
    return f"controller_{tag}.ckpt"


@dataclass
class ControllerFamily:
    """Frozen controllers by tag with their logs and validation errors."""

    controllers: dict[str, PredictorModel]
    logs: dict[str, TrainingLog]
    validation_mse: dict[str, float]
    warnings: list[str] = field(default_factory=list)

    def hashes(self) -> dict[str, str]:
        """Weight hash of every controller."""
        return {tag: c.weights_hash() for tag, c in self.controllers.items()}

    @property
    def distinct(self) -> bool:
        """No two controllers ended with the same weights."""
        values = list(self.hashes().values())
        return len(set(values)) == len(values)


def train_controller_family(
    datasets: Mapping[str, LoadedDataset],
    *,
    model: ModelSection,
    config: PretrainConfig,
    seed: int,
) -> ControllerFamily:
    """
    Train one controller per dataset from identical initial weights.

    Args:
        datasets: training data by tag, e.g. ``{"a": full, "b": cones_only,
            "c": empty}``. Each train split fits its controller; the
            validation split (when present) gives the reported error.
        model: architecture sizes shared by every controller.
        config: epochs, batch size, learning rate and batch-order seed.
        seed: seed of the shared initial weights.

    """
    if not datasets:
        msg = "at least one controller dataset is required"
        raise ConfigurationError(msg)
    widths = {ds.labels.shape[1] for ds in datasets.values()}
    sizes = {ds.images.shape[-1] for ds in datasets.values()}
    if len(widths) != 1 or len(sizes) != 1:
        msg = "controller datasets must share image size and label width"
        raise ConfigurationError(msg)
    (output_dim,) = widths
    (image_size,) = sizes

    controllers: dict[str, PredictorModel] = {}
    logs: dict[str, TrainingLog] = {}
    errors: dict[str, float] = {}
    for tag, dataset in datasets.items():
        train = dataset.split(DatasetSplit.TRAIN)
        if len(train) == 0:
            msg = f"dataset of controller {tag} has no training samples"
            raise EmptyDatasetError(msg)
        controller = build_predictor(
            image_size,
            output_dim,
            base_channels=model.base_channels,
            hidden_units=model.hidden_units,
            seed=seed,
        )
        logs[tag] = train_predictor(
            controller,
            train.images,
            train.labels,
            config=config,
        )
        held = dataset.split(DatasetSplit.VALIDATION)
        scored = held if len(held) else train
        errors[tag] = predictor_mse(controller, scored.images, scored.labels)
        logger.info("controller %s: validation mse %.4g", tag, errors[tag])
        controllers[tag] = controller

    family = ControllerFamily(controllers, logs, errors)
    if not family.distinct:
        message = "two or more controllers ended with identical weights"
        family.warnings.append(message)
        logger.warning(message)
    return family


def save_family(family: ControllerFamily, out_dir: str | Path) -> dict[str, Path]:
    """Write every controller to ``controller_<tag>.ckpt`` under ``out_dir``."""
    root = Path(out_dir)
    paths: dict[str, Path] = {}
    for tag, controller in family.controllers.items():
        paths[tag] = root / controller_file(tag)
        save_checkpoint(controller, paths[tag])
    return paths


def load_controllers(
    paths: Sequence[str | Path],
    tags: Sequence[str] = RobustnessDefaults.CONTROLLER_TAGS,
) -> dict[str, PredictorModel]:
    """Frozen controllers from checkpoint files, tagged in the given order."""
    if len(paths) > len(tags):
        msg = f"{len(paths)} controllers but only {len(tags)} tags"
        raise ConfigurationError(msg)
    loaded: dict[str, PredictorModel] = {}
    for tag, path in zip(tags, paths, strict=False):
        model = load_checkpoint(path)
        if not isinstance(model, PredictorModel):
            msg = f"{path} holds a {model.kind}, not a {ModelKind.PREDICTOR}"
            raise UnsupportedOperationError(msg)
        model.freeze()
        loaded[tag] = model
    return loaded
