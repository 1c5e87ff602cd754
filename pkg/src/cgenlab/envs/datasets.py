"""
Dataset directories shared by every pipeline stage.

A dataset directory holds one PGM per sample, ``manifest.yaml`` (generator,
seed, parameters, per-sample file, split and label) and ``labels.csv`` (the
same labels as a flat table). The manifest alone is enough to regenerate the
images bitwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from pydantic import ValidationError

from cgenlab.config.constants import (
    ArtifactName,
    DatasetSplit,
    EnvName,
    NavComplexity,
    NavDefaults,
    ShapesDefaults,
    StonesDefaults,
)
from cgenlab.envs.nav import gen_nav_dataset
from cgenlab.envs.shapes import gen_shapes_dataset
from cgenlab.envs.stones import gen_stones_dataset
from cgenlab.errors import ConfigurationError, MissingPrerequisiteError
from cgenlab.io.pgm import read_pgm, write_pgm
from cgenlab.io.records import read_yaml, write_csv, write_yaml
from cgenlab.schemas.envs.manifest import DatasetManifest, ManifestEntry

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)


def sample_file(index: int) -> str:
    """File name of sample ``index``."""
    return f"sample_{index:06d}.pgm"


@dataclass(frozen=True)
class GeneratedDataset:
    """Freshly rendered images with the manifest describing them."""

    manifest: DatasetManifest
    images: np.ndarray


def _entries(
    labels: Sequence[Sequence[float]],
    splits: Sequence[DatasetSplit],
    barriers: Sequence[bool] | None = None,
) -> list[ManifestEntry]:
    flags = barriers if barriers is not None else [False] * len(labels)
    return [
        ManifestEntry(
            file=sample_file(i),
            split=split,
            label=tuple(float(v) for v in label),
            has_barrier=flag,
        )
        for i, (label, split, flag) in enumerate(
            zip(labels, splits, flags, strict=True),
        )
    ]


def generate_dataset(  # noqa: PLR0913
    env: EnvName | str,
    count: int,
    seed: int,
    *,
    complexity: NavComplexity | str = NavComplexity.FULL,
    delta: float = StonesDefaults.DELTA,
    augment: bool = False,
    validation_fraction: float = ShapesDefaults.VALIDATION_FRACTION,
    workers: int = 1,
) -> GeneratedDataset:
    """
    Render ``count`` samples of ``env``.

    Args:
        env: which generator to run.
        count: number of samples.
        seed: dataset seed; per-sample seeds derive from it and the index.
        complexity: obstacle filter of the navigation world.
        delta: reach threshold of the stepping-stones lane.
        augment: sub-pixel jitter and pixel noise for stepping-stones images.
        validation_fraction: share of trailing samples held out.
        workers: threads used to render samples.

    Returns:
        The images as ``N×1×H×W`` float32 and the manifest describing them.

    """
    try:
        env = EnvName(env)
    except ValueError as exc:
        allowed = ", ".join(e.value for e in EnvName)
        msg = f"unknown environment '{env}' (expected one of: {allowed})"
        raise ConfigurationError(msg) from exc

    params: dict[str, Any] = {}
    barriers: list[bool] | None = None
    match env:
        case EnvName.SHAPES:
            samples = gen_shapes_dataset(
                count,
                seed,
                validation_fraction=validation_fraction,
                workers=workers,
            )
            images = np.stack([s.image for s in samples])
            labels: list[tuple[float, ...]] = [(float(s.class_id),) for s in samples]
            splits = [s.split for s in samples]
            size = ShapesDefaults.IMAGE_SIZE
        case EnvName.STONES:
            stones = gen_stones_dataset(
                count,
                seed,
                augment=augment,
                delta=delta,
                validation_fraction=validation_fraction,
                workers=workers,
            )
            images = stones.images
            labels = [(float(v),) for v in stones.labels]
            splits = stones.splits
            size = StonesDefaults.IMAGE_SIZE
            params = {"delta": delta, "augment": augment}
        case EnvName.NAV:
            complexity = NavComplexity(complexity)
            nav = gen_nav_dataset(
                complexity,
                count,
                seed,
                validation_fraction=validation_fraction,
                workers=workers,
            )
            images = nav.images
            labels = [tuple(float(v) for v in row) for row in nav.labels]
            splits = nav.splits
            barriers = [scene.has_barrier for scene in nav.scenes]
            size = NavDefaults.IMAGE_SIZE
            params = {"complexity": complexity.value}

    manifest = DatasetManifest(
        generator=env,
        seed=seed,
        count=count,
        image_size=size,
        validation_fraction=validation_fraction,
        params=params,
        entries=_entries(labels, splits, barriers),
    )
    stacked = np.asarray(images, dtype=np.float32).reshape(count, 1, size, size)
    return GeneratedDataset(manifest=manifest, images=stacked)


def regenerate(manifest: DatasetManifest, *, workers: int = 1) -> GeneratedDataset:
    """Rebuild the dataset a manifest describes."""
    params = manifest.params
    return generate_dataset(
        manifest.generator,
        manifest.count,
        manifest.seed,
        complexity=params.get("complexity", NavComplexity.FULL),
        delta=float(params.get("delta", StonesDefaults.DELTA)),
        augment=bool(params.get("augment", False)),
        validation_fraction=manifest.validation_fraction,
        workers=workers,
    )


def write_dataset(dataset: GeneratedDataset, out_dir: str | Path) -> Path:
    """Write PGMs, ``manifest.yaml`` and ``labels.csv`` into ``out_dir``."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    manifest = dataset.manifest
    for entry, image in zip(manifest.entries, dataset.images, strict=True):
        write_pgm(target / entry.file, image[0])
    write_yaml(target / ArtifactName.MANIFEST, manifest.model_dump(mode="json"))

    width = len(manifest.entries[0].label)
    columns = ["file", "split", *(f"label_{k}" for k in range(width)), "has_barrier"]
    rows = [
        {
            "file": e.file,
            "split": e.split.value,
            **{f"label_{k}": v for k, v in enumerate(e.label)},
            "has_barrier": int(e.has_barrier),
        }
        for e in manifest.entries
    ]
    write_csv(target / ArtifactName.LABELS, columns, rows)
    logger.info(
        "wrote %d %s samples to %s",
        manifest.count,
        manifest.generator.value,
        target,
    )
    return target


@dataclass(frozen=True)
class LoadedDataset:
    """Images read back from disk with their manifest labels."""

    manifest: DatasetManifest
    images: np.ndarray
    labels: np.ndarray
    splits: list[DatasetSplit]
    has_barrier: np.ndarray

    def __len__(self) -> int:
        """Number of samples."""
        return int(self.images.shape[0])

    def select(self, mask: np.ndarray) -> LoadedDataset:
        """Samples where ``mask`` is true, manifest entries included."""
        keep = np.flatnonzero(np.asarray(mask, dtype=bool))
        entries = [self.manifest.entries[i] for i in keep]
        manifest = self.manifest.model_copy(
            update={"entries": entries, "count": len(entries)},
        )
        return LoadedDataset(
            manifest=manifest,
            images=self.images[keep],
            labels=self.labels[keep],
            splits=[self.splits[i] for i in keep],
            has_barrier=self.has_barrier[keep],
        )

    def split(self, which: DatasetSplit) -> LoadedDataset:
        """One split of the dataset."""
        return self.select(np.array([s == which for s in self.splits], dtype=bool))


def load_manifest(directory: str | Path) -> DatasetManifest:
    """Parse and validate ``manifest.yaml`` of a dataset directory."""
    path = Path(directory) / ArtifactName.MANIFEST
    if not path.is_file():
        msg = f"dataset manifest not found: {path}"
        raise MissingPrerequisiteError(msg)
    try:
        return DatasetManifest.model_validate(read_yaml(path))
    except ValidationError as exc:
        msg = f"invalid dataset manifest {path}: {exc}"
        raise ConfigurationError(msg) from exc


def load_dataset(directory: str | Path) -> LoadedDataset:
    """Read every image listed in the manifest of ``directory``."""
    root = Path(directory)
    manifest = load_manifest(root)
    images = np.stack([read_pgm(root / e.file) for e in manifest.entries])
    return LoadedDataset(
        manifest=manifest,
        images=images[:, None, :, :].astype(np.float32),
        labels=np.array([e.label for e in manifest.entries], dtype=np.float64),
        splits=[e.split for e in manifest.entries],
        has_barrier=np.array([e.has_barrier for e in manifest.entries], dtype=bool),
    )
