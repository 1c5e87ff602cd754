"""
Noise-gain probe of a controller.

A fixed noise image ``μ`` is scaled by an increasing gain ``η`` and added to
the input. The controller has reached its limit at the first gain where its
output moves by at least ``ε`` in squared norm. Each trial draws its own
``μ``; the probe reports the median limit over the trials.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

import numpy as np

from cgenlab.autodiff.rng import make_rng
from cgenlab.errors import DimensionError

if TYPE_CHECKING:
    from cgenlab.schemas.robustness.probe import NoiseProbeConfig

logger = logging.getLogger(__name__)

_CHUNK = 32


class Predicts(Protocol):
    """Anything mapping an ``N×C×H×W`` batch to ``N×m`` outputs."""

    def predict(self, images: np.ndarray) -> np.ndarray: ...  # noqa: D102


def _predict(predictor: Predicts, images: np.ndarray) -> np.ndarray:
    parts = [
        np.asarray(predictor.predict(images[i : i + _CHUNK]), dtype=np.float64)
        for i in range(0, len(images), _CHUNK)
    ]
    out = np.concatenate(parts)
    return out.reshape(len(images), -1)


def output_shifts(
    predictor: Predicts,
    x: np.ndarray,
    mu: np.ndarray,
    schedule: np.ndarray,
) -> np.ndarray:
    """``‖p(x) − p(clip(x + η·μ))‖²`` for every gain of ``schedule``."""
    image = np.asarray(x)
    if mu.shape != image.shape:
        msg = f"noise of shape {mu.shape} cannot perturb an image of {image.shape}"
        raise DimensionError(msg)
    base = _predict(predictor, image[None])[0]
    gains = schedule.reshape(-1, *([1] * image.ndim))
    noisy = np.clip(image[None] + gains * mu[None], 0.0, 1.0).astype(image.dtype)
    out = _predict(predictor, noisy)
    return np.sum((out - base) ** 2, axis=1)


def limit_gain(shifts: np.ndarray, schedule: np.ndarray, epsilon: float) -> float:
    """First gain whose shift reaches ``epsilon``, else the last gain."""
    hits = np.flatnonzero(shifts >= epsilon)
    return float(schedule[hits[0]] if hits.size else schedule[-1])


def draw_noise(
    config: NoiseProbeConfig,
    shape: tuple[int, ...],
    key: str | int,
    trial: int,
) -> np.ndarray:
    """Unit-variance Gaussian image of one trial, fixed by seed, key and trial."""
    return make_rng(config.seed, "noise", key, trial).standard_normal(shape)


@dataclass(frozen=True)
class ProbeOutcome:
    """Per-trial limits of one input and their median."""

    limits: np.ndarray

    @property
    def eta_star(self) -> float:
        """Median limit over the trials."""
        return float(np.median(self.limits))


def probe_trials(
    predictor: Predicts,
    x: np.ndarray,
    config: NoiseProbeConfig,
    *,
    key: str | int = 0,
    noises: np.ndarray | None = None,
) -> ProbeOutcome:
    """
    Walk the gain schedule once per trial.

    ``noises`` replaces the seeded Gaussian draws with explicit ``μ`` images
    (one per trial); ``key`` scopes the draws so different inputs see
    different noise under the same seed.
    """
    schedule = config.schedule()
    image = np.asarray(x, dtype=np.float64)
    if noises is None:
        draws = [
            draw_noise(config, image.shape, key, t) for t in range(config.trials)
        ]
    else:
        draws = list(np.asarray(noises, dtype=np.float64))
    limits = np.array(
        [
            limit_gain(
                output_shifts(predictor, image, mu, schedule),
                schedule,
                config.epsilon,
            )
            for mu in draws
        ],
        dtype=np.float64,
    )
    return ProbeOutcome(limits=limits)


def noise_probe(
    predictor: Predicts,
    x: np.ndarray,
    config: NoiseProbeConfig,
    *,
    key: str | int = 0,
    noises: np.ndarray | None = None,
) -> float:
    """Noise limit ``η*`` of ``predictor`` at ``x`` (median over trials)."""
    eta_star = probe_trials(predictor, x, config, key=key, noises=noises).eta_star
    logger.debug("noise probe %s: eta* = %.3f", key, eta_star)
    return eta_star
