"""Dataset manifest written next to generated images."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cgenlab.config.constants import DatasetSplit, EnvName


class ManifestEntry(BaseModel):
    """One stored sample: image file, split and label."""

    model_config = ConfigDict(extra="forbid")

    file: str
    split: DatasetSplit
    label: tuple[float, ...]
    has_barrier: bool = False


class DatasetManifest(BaseModel):
    """Everything needed to regenerate a dataset bitwise."""

    model_config = ConfigDict(extra="forbid")

    generator: EnvName
    seed: int
    count: int = Field(ge=1)
    image_size: int = Field(ge=1)
    validation_fraction: float = Field(ge=0.0, lt=1.0)
    params: dict[str, Any] = Field(default_factory=dict)
    entries: list[ManifestEntry]

    @model_validator(mode="after")  # type: ignore[arg-type]
    def count_matches_entries(
        cls,  # noqa: N805
        model: "DatasetManifest",
    ) -> "DatasetManifest":
        """``count`` equals the number of listed entries."""
        if model.count != len(model.entries):
            listed = len(model.entries)
            msg = f"manifest declares {model.count} samples but lists {listed}"
            raise ValueError(msg)
        return model

    def split(self, which: DatasetSplit) -> list[ManifestEntry]:
        """Entries of one split, in manifest order."""
        return [e for e in self.entries if e.split == which]
