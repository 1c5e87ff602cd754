"""
Anti-aliased coverage helpers shared by the renderers.

Images use continuous pixel coordinates: pixel ``(row, col)`` covers
``[row, row+1) × [col, col+1)`` and its center is ``(row+0.5, col+0.5)``.
"""

from __future__ import annotations

import numpy as np


def interval_coverage(lo: float, hi: float, size: int) -> np.ndarray:
    """Fraction of each unit cell ``[i, i+1)`` covered by ``[lo, hi]``."""
    edges = np.arange(size, dtype=np.float64)
    return np.clip(np.minimum(hi, edges + 1.0) - np.maximum(lo, edges), 0.0, 1.0)


def box_coverage(
    center_row: float,
    center_col: float,
    side: float,
    size: int,
) -> np.ndarray:
    """Exact area coverage of an axis-aligned square on a ``size × size`` grid."""
    half = side / 2
    rows = interval_coverage(center_row - half, center_row + half, size)
    cols = interval_coverage(center_col - half, center_col + half, size)
    return np.outer(rows, cols)


def pixel_centers(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column center coordinates as broadcastable grids."""
    centers = np.arange(size, dtype=np.float64) + 0.5
    return centers[:, None], centers[None, :]


def soft_step(signed_distance: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """One-pixel linear ramp: 1 well inside (negative distance), 0 outside."""
    return np.clip(0.5 - signed_distance * scale, 0.0, 1.0)


def composite(base: np.ndarray, coverage: np.ndarray, value: float) -> np.ndarray:
    """Paint ``value`` over ``base`` with per-pixel ``coverage``."""
    return base * (1.0 - coverage) + value * coverage


def add_noise(image: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Additive Gaussian pixel noise, clipped back to [0, 1]."""
    if sigma <= 0:
        return image
    return np.clip(image + rng.normal(0.0, sigma, size=image.shape), 0.0, 1.0)
