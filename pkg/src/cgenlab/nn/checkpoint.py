"""
CGEN checkpoint container.

Layout::

    b"CGEN" | u32 LE version | u64 LE header length | YAML header | payload

The header lists model kind, construction parameters, layer stacks and a
tensor table (name, shape, byte offset, byte length); the payload is the
concatenation of the tensors as little-endian float32.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import yaml
from pydantic import ValidationError

from cgenlab.config.constants import CheckpointFormat, ModelKind
from cgenlab.errors import (
    CheckpointIOError,
    CorruptCheckpointError,
    TensorLengthMismatchError,
    UnsupportedVersionError,
)
from cgenlab.nn.models import (
    ClassifierModel,
    GeneratorModel,
    Model,
    PredictorModel,
    SequentialModel,
)
from cgenlab.schemas.checkpoint import CheckpointHeader, TensorRecord

if TYPE_CHECKING:
    from cgenlab.autodiff.tensor import Array

logger = logging.getLogger(__name__)

_PREAMBLE = struct.Struct("<4sIQ")


def _describe(model: Model) -> tuple[dict[str, Any], dict[str, list[Any]]]:
    if isinstance(model, GeneratorModel):
        config: dict[str, Any] = {
            "input_shape": list(model.input_shape),
            "variational": model.variational,
            "latent_dim": model.latent_dim,
        }
        stacks = {"encoder": model.encoder.specs, "decoder": model.decoder.specs}
    elif isinstance(model, SequentialModel):
        config = {
            "input_shape": list(model.input_shape),
            "prefix": model.prefix,
            "sequential": type(model) is SequentialModel,
        }
        stacks = {"layers": model.specs}
    else:
        msg = f"cannot serialize {type(model).__name__}"
        raise TypeError(msg)
    config["frozen"] = model.frozen
    return config, stacks


def encode_checkpoint(model: Model) -> bytes:
    """Serialize ``model`` into the container bytes."""
    config, stacks = _describe(model)
    records: list[TensorRecord] = []
    chunks: list[bytes] = []
    offset = 0
    for name, p in model.named_parameters():
        raw = np.ascontiguousarray(p.data, dtype=CheckpointFormat.PAYLOAD_DTYPE)
        chunk = raw.tobytes()
        records.append(
            TensorRecord(name=name, shape=p.shape, offset=offset, nbytes=len(chunk)),
        )
        chunks.append(chunk)
        offset += len(chunk)
    header = CheckpointHeader(
        kind=model.kind,
        config=config,
        stacks=stacks,
        tensors=records,
    )
    document = header.model_dump(mode="json")
    text = yaml.safe_dump(document, sort_keys=False).encode("utf-8")
    preamble = _PREAMBLE.pack(
        CheckpointFormat.MAGIC,
        CheckpointFormat.VERSION,
        len(text),
    )
    return preamble + text + b"".join(chunks)


def save_checkpoint(model: Model, path: str | Path) -> None:
    """Write ``model`` to ``path``."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(encode_checkpoint(model))
    except OSError as exc:
        msg = f"cannot write checkpoint {target}: {exc}"
        raise CheckpointIOError(msg) from exc
    logger.info("saved %s checkpoint to %s", model.kind, target)


def _parse_header(blob: bytes) -> tuple[CheckpointHeader, bytes]:
    if len(blob) < CheckpointFormat.PREAMBLE_BYTES:
        msg = "file is shorter than the checkpoint preamble"
        raise CorruptCheckpointError(msg)
    magic, version, header_len = _PREAMBLE.unpack_from(blob)
    if magic != CheckpointFormat.MAGIC:
        msg = f"bad magic {magic!r}, not a CGEN checkpoint"
        raise CorruptCheckpointError(msg)
    if version != CheckpointFormat.VERSION:
        msg = (
            f"checkpoint version {version} is not supported "
            f"(this release reads version {CheckpointFormat.VERSION})"
        )
        raise UnsupportedVersionError(msg)
    start = CheckpointFormat.PREAMBLE_BYTES
    end = start + header_len
    if end > len(blob):
        msg = "header extends past the end of the file"
        raise CorruptCheckpointError(msg)
    try:
        raw = yaml.safe_load(blob[start:end].decode("utf-8"))
        header = CheckpointHeader.model_validate(raw)
    except (UnicodeDecodeError, yaml.YAMLError, ValidationError) as exc:
        msg = f"malformed checkpoint header: {exc}"
        raise CorruptCheckpointError(msg) from exc
    return header, blob[end:]


def _build(header: CheckpointHeader) -> Model:
    cfg = header.config
    shape = tuple(cfg["input_shape"])
    if header.kind == ModelKind.GENERATOR:
        return GeneratorModel(
            header.stacks["encoder"],
            header.stacks["decoder"],
            shape,
            variational=bool(cfg["variational"]),
            latent_dim=int(cfg["latent_dim"]),
            seed=0,
        )
    specs = header.stacks["layers"]
    prefix = str(cfg["prefix"])
    if cfg.get("sequential"):
        return SequentialModel(specs, shape, seed=0, prefix=prefix)
    if header.kind == ModelKind.CLASSIFIER:
        return ClassifierModel(specs, shape, seed=0, prefix=prefix)
    return PredictorModel(specs, shape, seed=0, prefix=prefix)


def decode_checkpoint(blob: bytes) -> Model:
    """Rebuild a model from container bytes."""
    header, payload = _parse_header(blob)
    if len(payload) != header.payload_bytes:
        msg = (
            f"payload holds {len(payload)} bytes, the header declares "
            f"{header.payload_bytes}"
        )
        raise CorruptCheckpointError(msg)
    try:
        model = _build(header)
    except (KeyError, ValueError) as exc:
        msg = f"checkpoint header does not describe a buildable model: {exc}"
        raise CorruptCheckpointError(msg) from exc

    expected = dict(model.named_parameters())
    state: dict[str, Array] = {}
    for record in header.tensors:
        if record.name not in expected:
            msg = f"unknown tensor '{record.name}' in checkpoint"
            raise TensorLengthMismatchError(msg)
        want = expected[record.name].shape
        if tuple(record.shape) != want:
            msg = (
                f"tensor '{record.name}' is stored as {record.shape}, "
                f"the model needs {want}"
            )
            raise TensorLengthMismatchError(msg)
        chunk = payload[record.offset : record.offset + record.nbytes]
        values = np.frombuffer(chunk, dtype=CheckpointFormat.PAYLOAD_DTYPE)
        state[record.name] = values.astype(np.float32).reshape(record.shape)
    model.load_state_dict(state)
    if header.config.get("frozen"):
        model.freeze()
    return model


def load_checkpoint(path: str | Path) -> Model:
    """Read a model from ``path``."""
    source = Path(path)
    try:
        blob = source.read_bytes()
    except OSError as exc:
        msg = f"cannot read checkpoint {source}: {exc}"
        raise CheckpointIOError(msg) from exc
    return decode_checkpoint(blob)


def read_header(path: str | Path) -> CheckpointHeader:
    """Header only, for inspection."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        msg = f"cannot read checkpoint {path}: {exc}"
        raise CheckpointIOError(msg) from exc
    header, _ = _parse_header(blob)
    return header


def clone_model(model: Model) -> Model:
    """Independent copy through the container encoding (exact for float32)."""
    return decode_checkpoint(encode_checkpoint(model))
