"""Binary PGM (P5, maxval 255, single channel) images."""

from __future__ import annotations

import re
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from cgenlab.errors import ImageFormatError

if TYPE_CHECKING:
    import numpy.typing as npt

MAXVAL = 255
_HEADER = re.compile(rb"^P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def to_bytes(image: npt.ArrayLike) -> bytes:
    """Encode an ``H×W`` image in [0, 1] (values are clipped) as P5."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim > 2 and all(d == 1 for d in arr.shape[:-2]):
        arr = arr.reshape(arr.shape[-2:])
    if arr.ndim != 2:
        msg = f"PGM needs a 2-D image, got shape {arr.shape}"
        raise ImageFormatError(msg)
    levels = np.rint(np.clip(arr, 0.0, 1.0) * MAXVAL).astype(np.uint8)
    height, width = levels.shape
    return f"P5\n{width} {height}\n{MAXVAL}\n".encode("ascii") + levels.tobytes()


def from_bytes(blob: bytes) -> np.ndarray:
    """Decode P5 bytes into a float32 ``H×W`` image with pixel ``p`` → ``p/255``."""
    match = _HEADER.match(blob)
    if match is None:
        msg = "not a binary PGM (P5) file"
        raise ImageFormatError(msg)
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != MAXVAL:
        msg = f"unsupported PGM maxval {maxval}"
        raise ImageFormatError(msg)
    body = blob[match.end() : match.end() + width * height]
    if len(body) != width * height:
        msg = "PGM pixel data is truncated"
        raise ImageFormatError(msg)
    levels = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return levels.astype(np.float32) / np.float32(MAXVAL)


def write_pgm(path: str | Path, image: npt.ArrayLike) -> None:
    """Write ``image`` to ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(to_bytes(image))


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P5 image from ``path``."""
    return from_bytes(Path(path).read_bytes())


def diff_to_image(diff: npt.ArrayLike) -> np.ndarray:
    """Map a signed difference in [−1, 1] to [0, 1] around mid-gray."""
    return np.clip(0.5 + np.asarray(diff, dtype=np.float64) / 2.0, 0.0, 1.0)
