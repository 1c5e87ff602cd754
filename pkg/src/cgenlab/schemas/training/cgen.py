"""Loss weights and training budgets of the cGen trainers."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cgenlab.config.constants import (
    CGenDefaults,
    CGenMode,
    ModelDefaults,
    OptimizerKind,
)


class CGenWeights(BaseModel):
    """
    Balance coefficients of the cGen loss.

    Classification mode uses ``(1 − alpha, alpha)`` and leaves beta/gamma
    unset. Regression mode weighs ``alpha·l_g + beta·l_c + gamma·l_p``; the
    three need not sum to 1.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: CGenMode = CGenMode.CLASSIFICATION
    alpha: float = Field(default=CGenDefaults.ALPHA, ge=0.0, le=1.0)
    beta: float | None = Field(default=None, ge=0.0, le=1.0)
    gamma: float | None = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")  # type: ignore[arg-type]
    def mode_rules(cls, model: "CGenWeights") -> "CGenWeights":  # noqa: N805
        """beta/gamma are unset for classification and set for regression."""
        if model.mode == CGenMode.CLASSIFICATION:
            if model.beta is not None or model.gamma is not None:
                msg = "classification weights use alpha only; leave beta, gamma unset"
                raise ValueError(msg)
        elif model.beta is None or model.gamma is None:
            msg = "regression weights need alpha, beta and gamma"
            raise ValueError(msg)
        return model

    @classmethod
    def classification(cls, alpha: float = CGenDefaults.ALPHA) -> "CGenWeights":
        """Weights of the classification loss."""
        return cls(mode=CGenMode.CLASSIFICATION, alpha=alpha)

    @classmethod
    def regression(
        cls,
        alpha: float = CGenDefaults.REGRESSION_ALPHA,
        beta: float = CGenDefaults.REGRESSION_BETA,
        gamma: float = CGenDefaults.REGRESSION_GAMMA,
    ) -> "CGenWeights":
        """Weights of the regression loss."""
        return cls(mode=CGenMode.REGRESSION, alpha=alpha, beta=beta, gamma=gamma)

    def combine(self, l_g: float, l_c: float, l_p: float = 0.0) -> float:
        """Weighted total from component values."""
        if self.mode == CGenMode.CLASSIFICATION:
            return (1.0 - self.alpha) * l_g + self.alpha * l_c
        beta = self.beta or 0.0
        gamma = self.gamma or 0.0
        return self.alpha * l_g + beta * l_c + gamma * l_p


class PretrainConfig(BaseModel):
    """Budget of reconstruction, classifier and predictor pre-training."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=CGenDefaults.PRETRAIN_EPOCHS, ge=1)
    batch_size: int = Field(default=CGenDefaults.BATCH_SIZE, ge=1)
    learning_rate: float = Field(default=CGenDefaults.GENERATOR_LR, gt=0.0)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    kl_weight: float = Field(default=ModelDefaults.KL_WEIGHT, ge=0.0)
    reconstruction_threshold: float = Field(
        default=CGenDefaults.RECONSTRUCTION_THRESHOLD,
        gt=0.0,
    )
    seed: int = 0


class TrainConfig(BaseModel):
    """Budget and weights of adversarial cGen training."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=CGenDefaults.EPOCHS, ge=1)
    batch_size: int = Field(default=CGenDefaults.BATCH_SIZE, ge=1)
    generator_lr: float = Field(default=CGenDefaults.GENERATOR_LR, gt=0.0)
    classifier_lr: float = Field(default=CGenDefaults.CLASSIFIER_LR, gt=0.0)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    seed: int = 0
    weights: CGenWeights = Field(default_factory=CGenWeights)
    target_class: int = Field(default=CGenDefaults.TARGET_CLASS, ge=0, le=1)
    generator_epochs_per_round: int = Field(
        default=CGenDefaults.GENERATOR_EPOCHS_PER_ROUND,
        ge=1,
    )
    denoise: bool = False
    # Regression target shared by every original; zeros when unset.
    goal: list[float] | None = None


class LatentSearchConfig(BaseModel):
    """Step budget of the per-instance latent search."""

    model_config = ConfigDict(extra="forbid")

    steps: int = Field(default=CGenDefaults.LATENT_STEPS, ge=1)
    learning_rate: float = Field(default=CGenDefaults.LATENT_LR, gt=0.0)
    tolerance: float = Field(default=CGenDefaults.CONVERGENCE_TOL, ge=0.0)
    patience: int = Field(default=CGenDefaults.CONVERGENCE_PATIENCE, ge=1)
