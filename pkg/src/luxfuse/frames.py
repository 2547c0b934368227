"""8-bit frame container and lossless raster I/O."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image


class Modality(Enum):
    RGB = "rgb"
    LWIR = "lwir"
    FUSED = "fused"


@dataclass(frozen=True, eq=False)
class Frame:
    """A 3-channel 8-bit raster tagged with modality and capture time.

    ``pixels`` is a row-major ``(height, width, 3)`` uint8 array.  The buffer
    is marked read-only on construction, so frames are immutable values that
    can be shared freely between workers.
    """

    pixels: np.ndarray
    modality: Modality
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected a (h, w, 3) pixel array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"frame dimensions must be positive, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got dtype {px.dtype}")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        """(width, height) in pixels."""
        return self.width, self.height

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.modality is other.modality
            and self.timestamp_ms == other.timestamp_ms
            and self.pixels.shape == other.pixels.shape
            and bool(np.array_equal(self.pixels, other.pixels))
        )

    def __repr__(self) -> str:
        return (
            f"Frame({self.width}x{self.height}, {self.modality.value}, "
            f"t={self.timestamp_ms}ms)"
        )


def read_frame(path: str | Path, modality: Modality, timestamp_ms: int = 0) -> Frame:
    """Load an image file as an 8-bit RGB frame of the given modality."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Frame(arr, modality, timestamp_ms)


def write_frame(frame: Frame, path: str | Path) -> None:
    """Write a frame as an 8-bit RGB PNG (or whatever the suffix selects)."""
    Image.fromarray(frame.pixels, mode="RGB").save(path)
