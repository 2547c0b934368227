"""Generator for a complete synthetic working set: recordings, traces, tables.

Everything written here is deterministic, so fixture trees can be regenerated
and compared byte-for-byte.  The mock confidence table carries the
dim/full/no-light means measured on the bench rig where available and a
smooth synthetic surface elsewhere.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .config import AppConfig, write_config
from .dataset import Annotation, write_annotations
from .frames import write_frame
from .fusion import FUSION_GRID
from .illumination import IlluminationCategory, LuxReading, write_lux_trace
from .registry import default_registry, save_registry
from .synthetic import SceneSpec, generate_synthetic_pair

# Bench-measured mean confidences for the cells with recorded results.
MEASURED_MEANS: dict[tuple[int, IlluminationCategory], float] = {
    (100, IlluminationCategory.FULL_LIGHT): 0.9250,
    (90, IlluminationCategory.FULL_LIGHT): 0.9295,
    (80, IlluminationCategory.FULL_LIGHT): 0.9283,
    (70, IlluminationCategory.FULL_LIGHT): 0.9238,
    (90, IlluminationCategory.DIM_LIGHT): 0.9203,
    (80, IlluminationCategory.DIM_LIGHT): 0.9000,
    (70, IlluminationCategory.DIM_LIGHT): 0.8543,
    (50, IlluminationCategory.NO_LIGHT): 0.7227,
    (40, IlluminationCategory.NO_LIGHT): 0.7103,
    (100, IlluminationCategory.NO_LIGHT): 0.384,
    (0, IlluminationCategory.NO_LIGHT): 0.541,
}

_COLORS = ("white", "black", "orange", "blue", "teal", "yellow")

# Small deterministic per-color offsets so rankings have nonzero variability.
_COLOR_OFFSETS = {
    "white": 0.020,
    "black": -0.030,
    "orange": -0.008,
    "blue": -0.012,
    "teal": 0.008,
    "yellow": 0.002,
}

# Per-cell multipliers on the color spread.  Weak models vary more across
# colors than strong ones; the mid no-light blend is notoriously inconsistent.
_SPREAD_OVERRIDES: dict[tuple[int, IlluminationCategory], float] = {
    (50, IlluminationCategory.NO_LIGHT): 3.0,
}


def _color_spread(percent: int, category: IlluminationCategory, base: float) -> float:
    if (percent, category) in _SPREAD_OVERRIDES:
        return _SPREAD_OVERRIDES[(percent, category)]
    return 0.5 + 3.0 * max(0.0, 0.95 - base)

_CATEGORY_LUX = {
    IlluminationCategory.FULL_LIGHT: 2000.0,
    IlluminationCategory.DIM_LIGHT: 500.0,
    IlluminationCategory.NO_LIGHT: 5.0,
}


def _base_mean(percent: int, category: IlluminationCategory) -> float:
    if (percent, category) in MEASURED_MEANS:
        return MEASURED_MEANS[(percent, category)]
    # Smooth filler: RGB-heavy ratios dominate in light, intermediate in dark.
    x = percent / 100.0
    if category is IlluminationCategory.FULL_LIGHT:
        return 0.55 + 0.37 * x
    if category is IlluminationCategory.DIM_LIGHT:
        return 0.50 + 0.40 * x
    return 0.70 - 0.9 * (x - 0.45) ** 2


def build_mock_table() -> dict[tuple[int, IlluminationCategory, str], float]:
    table = {}
    for category in IlluminationCategory:
        for percent in FUSION_GRID:
            base = _base_mean(percent, category)
            spread = _color_spread(percent, category, base)
            for color in _COLORS:
                value = min(1.0, max(0.0, base + spread * _COLOR_OFFSETS[color]))
                table[(percent, category, color)] = round(value, 4)
    return table


def save_mock_table(table: dict, path: str | Path) -> None:
    raw = {
        f"{percent}|{category.value}|{color}": value
        for (percent, category, color), value in table.items()
    }
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_mock_table(path: str | Path) -> dict[tuple[int, IlluminationCategory, str], float]:
    with open(path) as fh:
        raw = json.load(fh)
    table = {}
    for key, value in raw.items():
        percent, category, color = key.split("|")
        table[(int(percent), IlluminationCategory.from_value(category), color)] = float(value)
    return table


def write_recording(
    root: Path,
    recording_id: str,
    lux_values: list[float],
    color_label: str,
    n_frames: int | None = None,
    width: int = 64,
    height: int = 48,
    frame_interval_ms: int = 100,
) -> None:
    """Write one synthetic recording: a disc drifting slowly across frame."""
    rec = root / recording_id
    (rec / "rgb").mkdir(parents=True, exist_ok=True)
    (rec / "lwir").mkdir(exist_ok=True)
    (rec / "labels").mkdir(exist_ok=True)

    if n_frames is None:
        n_frames = len(lux_values)
    meta_rows = []
    for i in range(n_frames):
        ts = i * frame_interval_ms
        # Drift the target a little around center, staying well inside bounds.
        cx = width / 2 + 6.0 * ((i % 20) - 10) / 10.0
        cy = height / 2 + 3.0 * ((i % 12) - 6) / 6.0
        spec = SceneSpec(width, height, (cx, cy), 6.0, timestamp_ms=ts)
        rgb, lwir = generate_synthetic_pair(spec)
        name = f"frame{i:04d}"
        write_frame(rgb, rec / "rgb" / f"{name}.png")
        write_frame(lwir, rec / "lwir" / f"{name}.png")
        write_annotations([Annotation(0, spec.bbox_normalized())], rec / "labels" / f"{name}.txt")
        lux = lux_values[min(i, len(lux_values) - 1)]
        meta_rows.append([name, ts, repr(lux), color_label])

    with open(rec / "meta.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "timestamp_ms", "lux", "color_label"])
        writer.writerows(meta_rows)


def generate_fixtures(out_dir: str | Path, n_frames: int = 30) -> dict[str, Path]:
    """Write the full fixture set and return the paths of the pieces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    registry_path = out / "registry.json"
    save_registry(default_registry(), registry_path)

    table_path = out / "mock_table.json"
    save_mock_table(build_mock_table(), table_path)

    source = out / "source"
    for category, recording in (
        (IlluminationCategory.FULL_LIGHT, "rec_full"),
        (IlluminationCategory.DIM_LIGHT, "rec_dim"),
        (IlluminationCategory.NO_LIGHT, "rec_no"),
    ):
        write_recording(source, recording, [_CATEGORY_LUX[category]], "white", n_frames=n_frames)
    ramp = [2000.0] * (n_frames // 3) + [500.0] * (n_frames // 3)
    ramp += [5.0] * (n_frames - len(ramp))
    write_recording(source, "rec_ramp", ramp, "white", n_frames=n_frames)

    traces = out / "lux_traces"
    traces.mkdir(exist_ok=True)
    write_lux_trace(
        [LuxReading(2000.0, 0), LuxReading(500.0, 1000), LuxReading(5.0, 2000)],
        traces / "ramp.csv",
    )
    write_lux_trace(
        [LuxReading(500.0, i * 100) for i in range(n_frames)], traces / "dim.csv"
    )

    config_path = out / "config.ini"
    cfg = AppConfig(
        registry_path=str(registry_path),
        mock_table_path=str(table_path),
    )
    write_config(cfg, config_path)

    return {
        "registry": registry_path,
        "mock_table": table_path,
        "source": source,
        "lux_traces": traces,
        "config": config_path,
    }
