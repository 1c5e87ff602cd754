"""Two-class ring images: class 0 is a single ring, class 1 a double ring."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from cgenlab.autodiff.rng import sample_rng
from cgenlab.config.constants import DatasetSplit, EnvName, ShapesDefaults
from cgenlab.envs.raster import add_noise, pixel_centers
from cgenlab.errors import ConfigurationError
from cgenlab.schemas.envs.scenes import ShapesParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShapesSample:
    """One rendered ring image with its class and render parameters."""

    image: np.ndarray
    class_id: int
    params: ShapesParams
    split: DatasetSplit


def _ring(radius: float, stroke: float, cx: float, cy: float, size: int) -> np.ndarray:
    rows, cols = pixel_centers(size)
    dist = np.hypot(rows - cy, cols - cx)
    return np.clip(stroke / 2 + 0.5 - np.abs(dist - radius), 0.0, 1.0)


def render_shapes(
    params: ShapesParams,
    *,
    size: int = ShapesDefaults.IMAGE_SIZE,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Noise-free rings, plus pixel noise when ``rng`` is given."""
    image = _ring(params.radius, params.stroke, params.center_x, params.center_y, size)
    if params.class_id == 1:
        inner = _ring(
            params.inner_radius,
            params.stroke,
            params.center_x,
            params.center_y,
            size,
        )
        image = np.maximum(image, inner)
    if rng is not None:
        image = add_noise(image, params.noise_sigma, rng)
    return image.astype(np.float32)


def sample_shapes_params(class_id: int, rng: np.random.Generator) -> ShapesParams:
    """Draw center jitter, radius and stroke width for one image."""
    center = ShapesDefaults.IMAGE_SIZE / 2
    jitter = ShapesDefaults.CENTER_JITTER
    return ShapesParams(
        class_id=class_id,
        center_x=center + float(rng.uniform(-jitter, jitter)),
        center_y=center + float(rng.uniform(-jitter, jitter)),
        radius=float(rng.uniform(ShapesDefaults.MIN_RADIUS, ShapesDefaults.MAX_RADIUS)),
        stroke=float(rng.uniform(ShapesDefaults.MIN_STROKE, ShapesDefaults.MAX_STROKE)),
    )


def validation_count(n: int, fraction: float) -> int:
    """Number of trailing samples assigned to the validation split."""
    return math.floor(n * fraction + 1e-9)


def split_tags(n: int, fraction: float) -> list[DatasetSplit]:
    """Per-sample split tags: training first, validation last."""
    n_train = n - validation_count(n, fraction)
    train, validation = DatasetSplit.TRAIN, DatasetSplit.VALIDATION
    return [train if i < n_train else validation for i in range(n)]


def _shapes_sample(seed: int, index: int, n_train: int) -> ShapesSample:
    rng = sample_rng(seed, EnvName.SHAPES, index)
    class_id = (index + 1) % 2
    params = sample_shapes_params(class_id, rng)
    split = DatasetSplit.TRAIN if index < n_train else DatasetSplit.VALIDATION
    return ShapesSample(
        image=render_shapes(params, rng=rng),
        class_id=class_id,
        params=params,
        split=split,
    )


def gen_shapes_dataset(
    n: int,
    seed: int,
    *,
    validation_fraction: float = ShapesDefaults.VALIDATION_FRACTION,
    workers: int = 1,
) -> list[ShapesSample]:
    """
    ``n`` ring images with ⌈n/2⌉ of class 1 and ⌊n/2⌋ of class 0.

    Classes alternate starting with class 1; the last ``n·fraction`` samples
    form the validation split. Each sample draws from its own seed, so the
    result does not depend on ``workers``.
    """
    if n <= 0:
        msg = f"dataset size must be positive, got {n}"
        raise ConfigurationError(msg)
    n_train = n - validation_count(n, validation_fraction)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        samples = list(
            pool.map(lambda i: _shapes_sample(seed, i, n_train), range(n)),
        )
    logger.info("generated %d shapes samples (seed %d)", n, seed)
    return samples
