"""Deterministic synthetic scene pairs used as camera-rig stand-ins."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .frames import Frame, Modality


class FixtureError(ValueError):
    """Raised when a scene descriptor cannot be rendered."""


@dataclass(frozen=True)
class SceneSpec:
    """A flat background with one hot disc target, shared by both modalities.

    The disc covers the pixels strictly inside ``disc_radius`` of
    ``disc_center`` (a radius of 0 renders no target at all).  The RGB frame
    shows the disc in ``disc_rgb`` on a gray background; the LWIR frame shows
    it at the ``disc_lwir`` intensity on the same background level.
    """

    width: int
    height: int
    disc_center: tuple[float, float]
    disc_radius: float
    background: int = 32
    disc_rgb: tuple[int, int, int] = (220, 60, 40)
    disc_lwir: int = 235
    timestamp_ms: int = 0

    def moved(self, dx: float, dy: float, timestamp_ms: int | None = None) -> "SceneSpec":
        cx, cy = self.disc_center
        ts = self.timestamp_ms if timestamp_ms is None else timestamp_ms
        return replace(self, disc_center=(cx + dx, cy + dy), timestamp_ms=ts)

    def bbox_normalized(self) -> tuple[float, float, float, float]:
        """Ground-truth (cx, cy, w, h) of the disc, normalized to frame dims."""
        cx, cy = self.disc_center
        d = 2.0 * self.disc_radius
        return (cx / self.width, cy / self.height, d / self.width, d / self.height)


def _validate(spec: SceneSpec) -> None:
    if spec.width < 1 or spec.height < 1:
        raise FixtureError(f"scene dimensions must be positive, got {spec.width}x{spec.height}")
    if spec.disc_radius < 0:
        raise FixtureError(f"disc radius must be non-negative, got {spec.disc_radius}")
    if not 0 <= spec.background <= 255:
        raise FixtureError(f"background intensity out of range: {spec.background}")
    if not 0 <= spec.disc_lwir <= 255:
        raise FixtureError(f"LWIR disc intensity out of range: {spec.disc_lwir}")
    if any(not 0 <= c <= 255 for c in spec.disc_rgb):
        raise FixtureError(f"RGB disc color out of range: {spec.disc_rgb}")
    cx, cy = spec.disc_center
    r = spec.disc_radius
    if r > 0 and (cx - r < 0 or cx + r > spec.width - 1 or cy - r < 0 or cy + r > spec.height - 1):
        raise FixtureError(
            f"disc (center=({cx}, {cy}), radius={r}) exceeds "
            f"{spec.width}x{spec.height} frame bounds"
        )


def generate_synthetic_pair(spec: SceneSpec) -> tuple[Frame, Frame]:
    """Render the deterministic (RGB, LWIR) frame pair for a scene."""
    _validate(spec)
    h, w = spec.height, spec.width
    cx, cy = spec.disc_center

    ys, xs = np.mgrid[0:h, 0:w]
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 < spec.disc_radius**2

    rgb = np.full((h, w, 3), spec.background, dtype=np.uint8)
    rgb[inside] = np.array(spec.disc_rgb, dtype=np.uint8)

    lwir = np.full((h, w, 3), spec.background, dtype=np.uint8)
    lwir[inside] = spec.disc_lwir

    return (
        Frame(rgb, Modality.RGB, timestamp_ms=spec.timestamp_ms),
        Frame(lwir, Modality.LWIR, timestamp_ms=spec.timestamp_ms),
    )
