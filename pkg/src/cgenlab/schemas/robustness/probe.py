"""Noise-gain probe and robustness grid configuration."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cgenlab.config.constants import NavDefaults, ProbeDefaults, RobustnessDefaults


class NoiseProbeConfig(BaseModel):
    """Threshold ε, gain schedule and trial count of ``noise_probe``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilon: float = Field(default=ProbeDefaults.EPSILON, gt=0.0)
    eta_step: float = Field(default=ProbeDefaults.ETA_STEP, gt=0.0)
    eta_max: float = Field(default=ProbeDefaults.ETA_MAX, gt=0.0)
    trials: int = Field(default=ProbeDefaults.TRIALS, ge=1)
    seed: int = 0

    @model_validator(mode="after")  # type: ignore[arg-type]
    def step_below_max(
        cls,  # noqa: N805
        model: "NoiseProbeConfig",
    ) -> "NoiseProbeConfig":
        """The schedule holds at least one positive gain."""
        if model.eta_step > model.eta_max:
            msg = "eta_step must not exceed eta_max"
            raise ValueError(msg)
        return model

    def schedule(self) -> np.ndarray:
        """
        Gains ``0, step, 2·step, …`` up to ``eta_max``, strictly increasing.

        The last gain is always ``eta_max``; when it is not a multiple of the
        step the final increment is shorter.
        """
        n = int(np.floor(self.eta_max / self.eta_step + 1e-9))
        gains = np.round(np.arange(n + 1) * self.eta_step, 10)
        top = round(self.eta_max, 10)
        if gains[-1] < top:
            gains = np.append(gains, top)
        return gains


class RobustnessGrid(BaseModel):
    """Scenario count and goal angles of the controller comparison."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenarios: int = Field(default=RobustnessDefaults.SCENARIOS, ge=1)
    goals_deg: tuple[float, ...] = RobustnessDefaults.GOALS_DEG
    seed: int = 0

    @field_validator("goals_deg")
    def goals_in_range(
        cls,  # noqa: N805
        v: tuple[float, ...],
    ) -> tuple[float, ...]:
        """Every goal angle lies in the admissible cone."""
        limit = NavDefaults.MAX_GOAL_DEG
        if not v or any(abs(g) > limit for g in v):
            msg = f"goal angles must be non-empty and within ±{limit} degrees"
            raise ValueError(msg)
        return v
