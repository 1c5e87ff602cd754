"""Denoising post-pass and image-difference explanations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from cgenlab.config.constants import CGenDefaults
from cgenlab.errors import DimensionError
from cgenlab.nn.models import GeneratorModel

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def denoise(x_prime: np.ndarray, denoiser: GeneratorModel) -> np.ndarray:
    """
    One pass through an autoencoder trained on unmodified images.

    Accepts a single ``C×H×W`` image or a ``B×C×H×W`` batch and returns the
    same shape.
    """
    arr = np.asarray(x_prime, dtype=denoiser.dtype)
    single = arr.shape == denoiser.input_shape
    batch = arr[None] if single else arr
    if batch.shape[1:] != denoiser.input_shape:
        msg = f"denoiser expects {denoiser.input_shape} images, got {arr.shape}"
        raise DimensionError(msg)
    out = denoiser.reconstruct(batch)
    return out[0] if single else out


@dataclass(frozen=True)
class ChangedRegion:
    """Connected region of the change mask."""

    row: float
    col: float
    pixels: int
    mean_change: float

    @property
    def added(self) -> bool:
        """Brighter in the counterfactual (something appeared)."""
        return self.mean_change > 0


@dataclass(frozen=True)
class DiffExplanation:
    """Signed difference ``x′ − x``, its threshold mask and the mask regions."""

    diff: np.ndarray
    mask: np.ndarray
    regions: list[ChangedRegion]

    @property
    def dominant(self) -> ChangedRegion | None:
        """Largest region, if any."""
        return max(self.regions, key=lambda r: r.pixels, default=None)


def counterfactual_diff(
    x: np.ndarray,
    x_prime: np.ndarray,
    threshold: float = CGenDefaults.MASK_THRESHOLD,
) -> DiffExplanation:
    """Pixels that moved by more than ``threshold``, grouped 4-connected."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_prime, dtype=np.float64)
    if a.shape != b.shape:
        msg = f"cannot compare images of shapes {a.shape} and {b.shape}"
        raise DimensionError(msg)
    diff = b - a
    plane = diff.reshape(diff.shape[-2:])
    mask = np.abs(plane) > threshold
    labels, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
    regions: list[ChangedRegion] = []
    if count:
        index = np.arange(1, count + 1)
        centers = ndimage.center_of_mass(np.abs(plane), labels, index)
        sizes = ndimage.sum_labels(mask, labels, index)
        means = ndimage.mean(plane, labels, index)
        regions = [
            ChangedRegion(
                row=float(r) + 0.5,
                col=float(c) + 0.5,
                pixels=int(s),
                mean_change=float(m),
            )
            for (r, c), s, m in zip(centers, sizes, means, strict=True)
        ]
    return DiffExplanation(diff=diff, mask=mask, regions=regions)
