"""Unit tests for binary PGM encoding."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from cgenlab.errors import ImageFormatError
from cgenlab.io.pgm import diff_to_image, from_bytes, read_pgm, to_bytes, write_pgm

if TYPE_CHECKING:
    from pathlib import Path


def test_header_and_rounding() -> None:
    blob = to_bytes(np.array([[0.0, 0.5, 1.0], [-0.2, 0.25, 2.0]]))
    assert blob.startswith(b"P5\n3 2\n255\n")
    assert blob[-6:] == bytes([0, 128, 255, 0, 64, 255])


def test_leading_unit_axes_are_dropped() -> None:
    image = np.zeros((1, 1, 2, 4))
    assert to_bytes(image).startswith(b"P5\n4 2\n")
    with pytest.raises(ImageFormatError):
        to_bytes(np.zeros((2, 4, 4)))
    with pytest.raises(ImageFormatError):
        to_bytes(np.zeros(4))


def test_decode_skips_header_comments() -> None:
    image = from_bytes(b"P5\n# written by hand\n2 1\n255\n\x00\xff")
    assert image.dtype == np.float32
    np.testing.assert_array_equal(image, [[0.0, 1.0]])


@pytest.mark.parametrize(
    "blob",
    [
        b"P2\n1 1\n255\n0",
        b"P5\n1 1\n65535\n\x00\x00",
        b"P5\n2 2\n255\n\x00\x00\x00",
        b"",
    ],
)
def test_malformed_files(blob: bytes) -> None:
    with pytest.raises(ImageFormatError):
        from_bytes(blob)


def test_file_round_trip_within_one_level(tmp_path: Path) -> None:
    image = np.linspace(0.0, 1.0, 12).reshape(3, 4)
    path = tmp_path / "nested" / "image.pgm"
    write_pgm(path, image)
    np.testing.assert_allclose(read_pgm(path), image, atol=0.5 / 255 + 1e-6)


def test_diff_to_image_centers_on_gray() -> None:
    np.testing.assert_allclose(
        diff_to_image([-1.0, -0.5, 0.0, 1.0, 3.0]),
        [0.0, 0.25, 0.5, 1.0, 1.0],
    )
