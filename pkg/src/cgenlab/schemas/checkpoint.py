"""YAML header of the CGEN checkpoint container."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cgenlab.config.constants import CheckpointFormat, ModelKind
from cgenlab.schemas.models.layers import LayerSpec


class TensorRecord(BaseModel):
    """Name, shape and byte range of one stored tensor."""

    model_config = ConfigDict(extra="forbid")

    name: str
    shape: tuple[int, ...]
    offset: int = Field(ge=0)
    nbytes: int = Field(ge=0)


class CheckpointHeader(BaseModel):
    """Model kind, construction parameters, layer stacks and tensor table."""

    model_config = ConfigDict(extra="forbid")

    kind: ModelKind
    config: dict[str, Any] = Field(default_factory=dict)
    stacks: dict[str, list[LayerSpec]]
    tensors: list[TensorRecord]

    @model_validator(mode="after")  # type: ignore[arg-type]
    def offsets_contiguous(
        cls,  # noqa: N805
        model: "CheckpointHeader",
    ) -> "CheckpointHeader":
        """Tensors are packed back to back from offset 0, in table order."""
        itemsize = CheckpointFormat.PAYLOAD_ITEM_BYTES
        end = 0
        for record in model.tensors:
            if record.offset < end:
                msg = f"tensor '{record.name}' overlaps its predecessor"
                raise ValueError(msg)
            if record.offset > end:
                msg = f"tensor '{record.name}' starts after a gap in the payload"
                raise ValueError(msg)
            count = 1
            for extent in record.shape:
                count *= extent
            if record.nbytes != count * itemsize:
                msg = (
                    f"tensor '{record.name}' declares {record.nbytes} bytes for "
                    f"shape {record.shape}"
                )
                raise ValueError(msg)
            end = record.offset + record.nbytes
        return model

    @property
    def payload_bytes(self) -> int:
        """Total byte length the payload must have."""
        if not self.tensors:
            return 0
        last = self.tensors[-1]
        return last.offset + last.nbytes

    @staticmethod
    def dtype() -> str:
        """Payload element type."""
        return CheckpointFormat.PAYLOAD_DTYPE
