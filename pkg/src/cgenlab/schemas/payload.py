"""
Definition of the full run configuration.

A run config is a YAML document with one mapping per section. Every section
has defaults, so an empty file is valid; unknown keys are rejected at every
level. Section seeds left unset are derived from the top-level ``seed``.
"""

from pydantic import BaseModel, ConfigDict, Field

from cgenlab.autodiff.rng import derive_seed
from cgenlab.config.constants import (
    EnvName,
    ModelDefaults,
    NavComplexity,
    ShapesDefaults,
    StonesDefaults,
)
from cgenlab.schemas.robustness.probe import NoiseProbeConfig, RobustnessGrid
from cgenlab.schemas.training.cgen import (
    LatentSearchConfig,
    PretrainConfig,
    TrainConfig,
)


class PathsSection(BaseModel):
    """Input datasets, checkpoints and the output directory."""

    model_config = ConfigDict(extra="forbid")

    data: str | None = None
    real_data: str | None = None
    out: str | None = None
    generator: str | None = None
    vae: str | None = None
    denoiser: str | None = None
    classifier: str | None = None
    predictor: str | None = None
    controllers: list[str] = Field(default_factory=list)
    scenarios: str | None = None


class DataSection(BaseModel):
    """Environment parameters of ``gen-data``."""

    model_config = ConfigDict(extra="forbid")

    env: EnvName = EnvName.SHAPES
    count: int = Field(default=200, ge=1)
    complexity: NavComplexity = NavComplexity.FULL
    delta: float = Field(default=StonesDefaults.DELTA, gt=0.0)
    augment: bool = False
    validation_fraction: float = Field(
        default=ShapesDefaults.VALIDATION_FRACTION,
        ge=0.0,
        lt=1.0,
    )


class ModelSection(BaseModel):
    """Architecture sizes shared by every network of a run."""

    model_config = ConfigDict(extra="forbid")

    latent_dim: int = Field(default=ModelDefaults.LATENT_DIM, ge=1)
    code_dim: int = Field(default=ModelDefaults.CODE_DIM, ge=1)
    base_channels: int = Field(default=ModelDefaults.BASE_CHANNELS, ge=1)
    hidden_units: int = Field(default=ModelDefaults.HIDDEN_UNITS, ge=1)
    variational: bool = False


class RunConfig(BaseModel):
    """Top-level run configuration shared by every ``cgen`` sub-command."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    paths: PathsSection = Field(default_factory=PathsSection)
    data: DataSection = Field(default_factory=DataSection)
    model: ModelSection = Field(default_factory=ModelSection)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    search: LatentSearchConfig = Field(default_factory=LatentSearchConfig)
    probe: NoiseProbeConfig = Field(default_factory=NoiseProbeConfig)
    robustness: RobustnessGrid = Field(default_factory=RobustnessGrid)

    def resolved(self) -> "RunConfig":
        """Copy with every unset section seed derived from ``seed``."""
        update: dict[str, BaseModel] = {}
        for name in ("pretrain", "training", "probe", "robustness"):
            section: BaseModel = getattr(self, name)
            if "seed" not in section.model_fields_set:
                seed = derive_seed(self.seed, name) & 0x7FFFFFFF
                update[name] = section.model_copy(update={"seed": seed})
        return self.model_copy(update=update)
