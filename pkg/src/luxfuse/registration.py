"""Spatial registration of LWIR frames onto the RGB pixel grid.

The two cameras are co-mounted at a fixed distance from the scene, so a
single calibrated homography suffices.  The stored matrix uses the pull
(backward-warp) convention: it maps *target* pixel coordinates to *source*
LWIR coordinates, and every output pixel is filled by sampling the source
through it with bilinear interpolation.  Samples that fall outside the
source raster are black.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import Frame, Modality


class RegistrationError(ValueError):
    """Raised for degenerate homographies or invalid registration inputs."""


@dataclass(frozen=True, eq=False)
class Homography:
    """A 3x3 projective transform with unit bottom-right element.

    Matrices are normalized so ``matrix[2, 2] == 1`` and must be invertible
    (determinant magnitude above 1e-12).
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise RegistrationError(f"homography must be 3x3, got shape {m.shape}")
        if m[2, 2] == 0.0:
            raise RegistrationError("homography bottom-right element must be nonzero")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= 1e-12:
            raise RegistrationError("homography is not invertible (|det| <= 1e-12)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, dx: float, dy: float) -> "Homography":
        m = np.eye(3)
        m[0, 2] = dx
        m[1, 2] = dy
        return cls(m)

    @classmethod
    def from_flat(cls, values) -> "Homography":
        """Build from nine row-major coefficients (the config file format)."""
        vals = [float(v) for v in values]
        if len(vals) != 9:
            raise RegistrationError(f"expected 9 homography coefficients, got {len(vals)}")
        return cls(np.array(vals, dtype=np.float64).reshape(3, 3))

    def apply(self, x: float, y: float) -> tuple[float, float]:
        """Map a single (x, y) target coordinate to source coordinates."""
        u, v, w = self.matrix @ (x, y, 1.0)
        return u / w, v / w

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Homography):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))


def register(
    lwir: Frame,
    h: Homography,
    target_width: int,
    target_height: int,
) -> Frame:
    """Warp an LWIR frame onto a target grid of the given dimensions.

    For every output pixel (x, y) the source is sampled at ``h.apply(x, y)``
    with bilinear interpolation; out-of-bounds samples come out black.  The
    identity homography with matching target dimensions is a byte-identity.
    """
    if lwir.modality is not Modality.LWIR:
        raise RegistrationError(f"register expects an LWIR frame, got {lwir.modality.value}")
    if target_width < 1 or target_height < 1:
        raise RegistrationError(
            f"target dimensions must be positive, got {target_width}x{target_height}"
        )

    src = lwir.pixels.astype(np.float64)
    src_h, src_w = src.shape[:2]
    m = h.matrix

    xs, ys = np.meshgrid(
        np.arange(target_width, dtype=np.float64),
        np.arange(target_height, dtype=np.float64),
    )
    w = m[2, 0] * xs + m[2, 1] * ys + m[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (m[0, 0] * xs + m[0, 1] * ys + m[0, 2]) / w
        v = (m[1, 0] * xs + m[1, 1] * ys + m[1, 2]) / w

    valid = (
        (w != 0.0)
        & np.isfinite(u)
        & np.isfinite(v)
        & (u >= 0.0)
        & (u <= src_w - 1)
        & (v >= 0.0)
        & (v <= src_h - 1)
    )
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)

    x0 = np.floor(u).astype(np.intp)
    y0 = np.floor(v).astype(np.intp)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    fx = (u - x0)[..., None]
    fy = (v - y0)[..., None]

    top = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
    bottom = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
    sampled = top * (1.0 - fy) + bottom * fy
    sampled[~valid] = 0.0

    out = np.clip(np.rint(sampled), 0, 255).astype(np.uint8)
    return Frame(out, Modality.LWIR, timestamp_ms=lwir.timestamp_ms)
