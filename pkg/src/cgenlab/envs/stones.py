"""
Stepping-stones lane.

An agent starts at 0 and hops from object to object along a unit lane; a hop
is legal when the gap is at most δ. The oracle controller reports 0 when the
target is reached and otherwise the size of the first illegal gap, measured
from the last reachable position.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from cgenlab.autodiff.rng import sample_rng
from cgenlab.config.constants import (
    DatasetSplit,
    EnvName,
    ShapesDefaults,
    StonesDefaults,
)
from cgenlab.envs.raster import add_noise, box_coverage
from cgenlab.envs.shapes import split_tags
from cgenlab.errors import ConfigurationError, SceneExtractionError
from cgenlab.schemas.envs.scenes import StonesScene

logger = logging.getLogger(__name__)

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


# ----------------------------------------------------------------------------
# Oracle
# ----------------------------------------------------------------------------


def _walk(scene: StonesScene) -> tuple[float, float]:
    """Return (last reachable position, residual)."""
    current = scene.start
    for position in scene.objects:
        if position > scene.target:
            break
        gap = position - current
        if gap > scene.delta:
            return current, gap
        current = position
    gap = scene.target - current
    if gap > scene.delta:
        return current, gap
    return scene.target, 0.0


def stones_oracle(scene: StonesScene) -> float:
    """Residual distance: 0 on success, else the first illegal gap."""
    return _walk(scene)[1]


def reachable_frontier(scene: StonesScene) -> float:
    """Furthest position the walk reaches (the target itself on success)."""
    return _walk(scene)[0]


# ----------------------------------------------------------------------------
# Rendering and extraction
# ----------------------------------------------------------------------------


def lane_to_pixel(u: float) -> float:
    """Continuous column coordinate of lane position ``u``."""
    return StonesDefaults.LANE_ORIGIN_PX + u * StonesDefaults.LANE_SPAN_PX


def pixel_to_lane(x_px: float) -> float:
    """Inverse of ``lane_to_pixel``."""
    return (x_px - StonesDefaults.LANE_ORIGIN_PX) / StonesDefaults.LANE_SPAN_PX


def render_stones(
    scene: StonesScene,
    *,
    offset_px: float = 0.0,
    size: int = StonesDefaults.IMAGE_SIZE,
) -> np.ndarray:
    """Objects as mid-intensity squares and the target as a bright square."""
    image = np.zeros((size, size), dtype=np.float64)
    side = StonesDefaults.SQUARE_SIDE_PX
    row = StonesDefaults.LANE_ROW
    for u in scene.objects:
        cover = box_coverage(row, lane_to_pixel(u) + offset_px, side, size)
        image = np.maximum(image, StonesDefaults.OBJECT_INTENSITY * cover)
    cover = box_coverage(row, lane_to_pixel(scene.target) + offset_px, side, size)
    image = np.maximum(image, StonesDefaults.TARGET_INTENSITY * cover)
    return image.astype(np.float32)


@dataclass(frozen=True)
class Blob:
    """Connected bright region of a stones image."""

    row: float
    col: float
    peak: float
    pixels: int


def find_blobs(
    image: np.ndarray,
    threshold: float = StonesDefaults.BLOB_THRESHOLD,
) -> list[Blob]:
    """4-connected regions above ``threshold`` with intensity-weighted centroids."""
    arr = np.asarray(image, dtype=np.float64)
    mask = arr > threshold
    labels, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
    if count == 0:
        return []
    index = np.arange(1, count + 1)
    centers = ndimage.center_of_mass(arr, labels, index)
    peaks = ndimage.maximum(arr, labels, index)
    sizes = ndimage.sum_labels(mask, labels, index)
    return [
        Blob(row=float(r) + 0.5, col=float(c) + 0.5, peak=float(p), pixels=int(s))
        for (r, c), p, s in zip(centers, peaks, sizes, strict=True)
    ]


def extract_stones_scene(
    image: np.ndarray,
    delta: float = StonesDefaults.DELTA,
) -> StonesScene:
    """
    Recover a scene from an image.

    The brightest blob at or above the target band is the target; the other
    blobs before it are objects. Blobs past the target play no part in the
    walk and are dropped.
    """
    blobs = find_blobs(image)
    targets = [b for b in blobs if b.peak >= StonesDefaults.TARGET_BAND_LOW]
    if not targets:
        msg = "no blob in the target intensity band"
        raise SceneExtractionError(msg)
    target_blob = max(targets, key=lambda b: (b.peak, b.pixels))
    target = float(np.clip(pixel_to_lane(target_blob.col), 0.0, 1.0))

    positions: list[float] = []
    for blob in sorted(blobs, key=lambda b: b.col):
        if blob is target_blob:
            continue
        u = float(np.clip(pixel_to_lane(blob.col), 0.0, 1.0))
        if u >= target or (positions and u <= positions[-1]):
            continue
        positions.append(u)
    return StonesScene(objects=tuple(positions), target=target, delta=delta)


# ----------------------------------------------------------------------------
# Scene sampling
# ----------------------------------------------------------------------------


def _legal_gaps(
    count: int,
    budget: float,
    delta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """``count`` gaps in [min_gap, δ] whose sum does not exceed ``budget``."""
    low = min(StonesDefaults.MIN_GAP, delta)
    weights = rng.uniform(0.0, 1.0, size=count)
    gaps = low + (delta - low) * weights
    if gaps.sum() > budget:
        spare = budget - count * low
        shrink = spare / ((delta - low) * weights.sum())
        gaps = low + (delta - low) * weights * shrink
    return gaps


def sample_stones_scene(
    rng: np.random.Generator,
    *,
    delta: float = StonesDefaults.DELTA,
    reachable: bool,
) -> StonesScene:
    """
    Constructive scene sampler.

    Reachable scenes chain 2–6 objects with legal gaps up to the target;
    unreachable scenes hold 2–5 objects and exactly one blocking gap of at
    least ``δ + margin``, so the residual equals that gap.
    """
    low = min(StonesDefaults.MIN_GAP, delta)
    if reachable:
        k = int(
            rng.integers(StonesDefaults.MIN_OBJECTS, StonesDefaults.MAX_OBJECTS + 1),
        )
        while (k + 1) * low > 1.0:
            k -= 1
        gaps = _legal_gaps(k + 1, 1.0, delta, rng)
    else:
        blocking_min = delta + StonesDefaults.BLOCKING_MARGIN
        k = int(rng.integers(StonesDefaults.MIN_OBJECTS, StonesDefaults.MAX_OBJECTS))
        while k > 0 and k * low + blocking_min > 1.0:
            k -= 1
        if k * low + blocking_min > 1.0:
            msg = f"δ={delta} leaves no room for a blocking gap on the unit lane"
            raise ConfigurationError(msg)
        blocking_max = blocking_min + StonesDefaults.MAX_BLOCKING_EXCESS
        blocking = float(rng.uniform(blocking_min, blocking_max))
        others = _legal_gaps(k, 1.0 - blocking_min, delta, rng)
        blocking = min(blocking, 1.0 - float(others.sum()))
        where = int(rng.integers(0, k + 1))
        gaps = np.insert(others, where, blocking)
    stops = np.cumsum(gaps)
    stops = np.minimum(stops, 1.0)
    return StonesScene(
        objects=tuple(float(s) for s in stops[:-1]),
        target=float(stops[-1]),
        delta=delta,
    )


@dataclass(frozen=True)
class StonesDataset:
    """Rendered images, oracle residuals and the underlying scenes."""

    images: np.ndarray
    labels: np.ndarray
    scenes: list[StonesScene]
    splits: list[DatasetSplit]

    @property
    def reachable(self) -> np.ndarray:
        """Boolean mask of scenes whose target is reached."""
        return self.labels == 0.0


def _stones_sample(
    seed: int,
    index: int,
    delta: float,
    augment: bool,  # noqa: FBT001
) -> tuple[np.ndarray, float, StonesScene]:
    rng = sample_rng(seed, EnvName.STONES, index)
    reachable = bool(rng.random() < StonesDefaults.REACHABLE_FRACTION)
    scene = sample_stones_scene(rng, delta=delta, reachable=reachable)
    offset = 0.0
    if augment:
        jitter = StonesDefaults.AUGMENT_JITTER_PX
        offset = float(rng.uniform(-jitter, jitter))
    image = render_stones(scene, offset_px=offset)
    if augment:
        sigma = StonesDefaults.AUGMENT_NOISE_SIGMA
        image = add_noise(image, sigma, rng).astype(np.float32)
    return image, stones_oracle(scene), scene


def gen_stones_dataset(
    n: int,
    seed: int,
    *,
    augment: bool = False,
    delta: float = StonesDefaults.DELTA,
    validation_fraction: float = ShapesDefaults.VALIDATION_FRACTION,
    workers: int = 1,
) -> StonesDataset:
    """``n`` (image, residual) pairs, about half of them reachable."""
    if n <= 0:
        msg = f"dataset size must be positive, got {n}"
        raise ConfigurationError(msg)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(
            pool.map(lambda i: _stones_sample(seed, i, delta, augment), range(n)),
        )
    images = np.stack([r[0] for r in rows]).astype(np.float32)
    labels = np.array([r[1] for r in rows], dtype=np.float64)
    logger.info(
        "generated %d stones scenes (seed %d, %.0f%% reachable)",
        n,
        seed,
        100.0 * float(np.mean(labels == 0.0)),
    )
    return StonesDataset(
        images=images,
        labels=labels,
        scenes=[r[2] for r in rows],
        splits=split_tags(n, validation_fraction),
    )
