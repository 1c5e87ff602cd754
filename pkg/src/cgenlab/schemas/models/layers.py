"""Schema of one layer in a sequential stack."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cgenlab.config.constants import Activation, LayerKind

_NEEDS = {
    LayerKind.CONV: ("out_channels", "kernel"),
    LayerKind.CONV_TRANSPOSE: ("out_channels", "kernel"),
    LayerKind.DENSE: ("units",),
    LayerKind.ACTIVATION: ("activation",),
    LayerKind.FLATTEN: (),
    LayerKind.RESHAPE: ("shape",),
}


class LayerSpec(BaseModel):
    """
    One layer of a plain feed-forward stack.

    Only the hyperparameters of ``kind`` may be set. ``in_channels`` and
    ``in_features`` are optional declarations checked against the incoming
    shape when the model is built.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: LayerKind
    out_channels: int | None = Field(default=None, ge=1)
    in_channels: int | None = Field(default=None, ge=1)
    kernel: int | None = Field(default=None, ge=1)
    stride: int = Field(default=1, ge=1)
    padding: int = Field(default=0, ge=0)
    units: int | None = Field(default=None, ge=1)
    in_features: int | None = Field(default=None, ge=1)
    activation: Activation | None = None
    shape: tuple[int, ...] | None = None

    @model_validator(mode="after")
    def check_hyperparameters(self) -> "LayerSpec":
        """Every required field is set and every foreign field is unset."""
        required = _NEEDS[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            msg = f"{self.kind} layer needs {', '.join(missing)}"
            raise ValueError(msg)

        allowed = set(required) | {"kind"}
        if self.kind in (LayerKind.CONV, LayerKind.CONV_TRANSPOSE):
            allowed |= {"in_channels", "stride", "padding"}
        if self.kind == LayerKind.DENSE:
            allowed.add("in_features")
        fields = type(self).model_fields
        foreign = sorted(
            name
            for name in self.model_fields_set
            if name not in allowed and getattr(self, name) != fields[name].default
        )
        if foreign:
            msg = f"{self.kind} layer does not accept {', '.join(foreign)}"
            raise ValueError(msg)

        if self.shape is not None and any(s < 1 for s in self.shape):
            msg = f"reshape extents must be positive, got {self.shape}"
            raise ValueError(msg)
        return self
