import numpy as np
import pytest

from luxfuse.frames import Modality
from luxfuse.synthetic import FixtureError, SceneSpec, generate_synthetic_pair


def test_radius_zero_gives_flat_backgrounds():
    spec = SceneSpec(64, 64, (32.0, 32.0), 0.0, background=40)
    rgb, lwir = generate_synthetic_pair(spec)
    assert (rgb.pixels == 40).all()
    assert (lwir.pixels == 40).all()


def test_deterministic():
    spec = SceneSpec(32, 32, (16.0, 16.0), 5.0)
    a = generate_synthetic_pair(spec)
    b = generate_synthetic_pair(spec)
    assert a[0] == b[0] and a[1] == b[1]


def test_disc_membership_is_exactly_strict_distance():
    spec = SceneSpec(64, 64, (32.0, 32.0), 8.0, background=32)
    rgb, lwir = generate_synthetic_pair(spec)
    ys, xs = np.mgrid[0:64, 0:64]
    inside = (xs - 32.0) ** 2 + (ys - 32.0) ** 2 < 8.0**2
    rgb_differs = (rgb.pixels != 32).any(axis=-1)
    lwir_differs = (lwir.pixels != 32).any(axis=-1)
    assert np.array_equal(rgb_differs, inside)
    assert np.array_equal(lwir_differs, inside)


def test_same_geometry_in_both_modalities():
    spec = SceneSpec(48, 48, (20.0, 25.0), 6.0, background=10)
    rgb, lwir = generate_synthetic_pair(spec)
    assert rgb.modality is Modality.RGB
    assert lwir.modality is Modality.LWIR
    assert np.array_equal((rgb.pixels != 10).any(axis=-1), (lwir.pixels != 10).any(axis=-1))


@pytest.mark.parametrize(
    "center, radius",
    [((2.0, 32.0), 8.0), ((62.0, 32.0), 8.0), ((32.0, 1.0), 4.0), ((32.0, 63.0), 4.0)],
)
def test_disc_exceeding_bounds_rejected(center, radius):
    with pytest.raises(FixtureError, match="exceeds"):
        generate_synthetic_pair(SceneSpec(64, 64, center, radius))


def test_negative_radius_rejected():
    with pytest.raises(FixtureError):
        generate_synthetic_pair(SceneSpec(64, 64, (32.0, 32.0), -1.0))


def test_moved_shifts_center_and_timestamp():
    spec = SceneSpec(64, 64, (32.0, 32.0), 8.0)
    shifted = spec.moved(2.0, -1.0, timestamp_ms=50)
    assert shifted.disc_center == (34.0, 31.0)
    assert shifted.timestamp_ms == 50


def test_bbox_normalized():
    spec = SceneSpec(64, 32, (32.0, 16.0), 8.0)
    assert spec.bbox_normalized() == (0.5, 0.5, 0.25, 0.5)
