"""Paired-recording ingestion, deterministic splits, and batch fusion.

Expected recording layout::

    root/<recording_id>/rgb/<frame>.png
    root/<recording_id>/lwir/<frame>.png
    root/<recording_id>/labels/<frame>.txt
    root/<recording_id>/meta.csv        # frame,timestamp_ms,lux,color_label

Annotations are one box per line, ``class_id cx cy w h``, space-separated
decimals normalized to frame dimensions.
"""

from __future__ import annotations

import csv
import hashlib
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from PIL import Image, UnidentifiedImageError

from .frames import Modality, read_frame, write_frame
from .fusion import ALL_LEVELS, FusionLevel, blend
from .registration import Homography, register


@dataclass(frozen=True)
class Annotation:
    class_id: int
    bbox: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        cx, cy, w, h = self.bbox
        if any(not 0.0 <= v <= 1.0 for v in self.bbox):
            raise ValueError(f"bbox values must be in [0, 1], got {self.bbox}")
        if w <= 0.0 or h <= 0.0:
            raise ValueError(f"bbox width/height must be positive, got {self.bbox}")

    def to_line(self) -> str:
        cx, cy, w, h = self.bbox
        return f"{self.class_id} {cx!r} {cy!r} {w!r} {h!r}"


def parse_annotation_line(line: str) -> Annotation:
    parts = line.split()
    if len(parts) != 5:
        raise ValueError(f"annotation line needs 5 fields, got {len(parts)}: {line!r}")
    try:
        class_id = int(parts[0])
        values = tuple(float(p) for p in parts[1:])
    except ValueError as exc:
        raise ValueError(f"annotation line is not numeric: {line!r}") from exc
    return Annotation(class_id, values)


def load_annotations(path: str | Path) -> list[Annotation]:
    annotations = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                annotations.append(parse_annotation_line(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return annotations


def write_annotations(annotations: Iterable[Annotation], path: str | Path) -> None:
    with open(path, "w") as fh:
        for ann in annotations:
            fh.write(ann.to_line() + "\n")


@dataclass(frozen=True)
class PairedSample:
    """One synchronized RGB/LWIR frame pair with its annotations and context."""

    sample_id: str
    recording_id: str
    frame: str
    rgb_path: Path
    lwir_path: Path
    label_path: Path
    timestamp_ms: int
    lux: float
    color_label: str
    annotations: tuple[Annotation, ...] = ()

    def __post_init__(self) -> None:
        if self.lux < 0:
            raise ValueError(f"sample {self.sample_id}: lux must be non-negative")


@dataclass(frozen=True)
class IngestError:
    path: str
    message: str


@dataclass
class IngestReport:
    samples: list[PairedSample]
    errors: list[IngestError]


def _decodable(path: Path) -> tuple[int, int] | None:
    try:
        with Image.open(path) as img:
            img.load()
            return img.size
    except (UnidentifiedImageError, OSError):
        return None


def ingest(root: str | Path) -> IngestReport:
    """Walk a recording tree and build a manifest of every valid pair.

    Invalid pairs (missing counterpart, undecodable image, malformed
    annotation, missing meta row) land in the error report with the
    offending path; they are never silently dropped.
    """
    root = Path(root)
    samples: list[PairedSample] = []
    errors: list[IngestError] = []
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a directory")

    for rec_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        meta_path = rec_dir / "meta.csv"
        meta: dict[str, dict] = {}
        if meta_path.exists():
            with open(meta_path, newline="") as fh:
                for row in csv.DictReader(fh):
                    meta[row["frame"]] = row
        else:
            errors.append(IngestError(str(meta_path), "missing meta.csv"))

        rgb_dir = rec_dir / "rgb"
        for rgb_path in sorted(rgb_dir.glob("*.png")) if rgb_dir.is_dir() else []:
            frame = rgb_path.stem
            sample_id = f"{rec_dir.name}/{frame}"
            lwir_path = rec_dir / "lwir" / f"{frame}.png"
            label_path = rec_dir / "labels" / f"{frame}.txt"

            if not lwir_path.exists():
                errors.append(IngestError(str(lwir_path), "missing LWIR counterpart"))
                continue
            if _decodable(rgb_path) is None:
                errors.append(IngestError(str(rgb_path), "undecodable image"))
                continue
            if _decodable(lwir_path) is None:
                errors.append(IngestError(str(lwir_path), "undecodable image"))
                continue
            if not label_path.exists():
                errors.append(IngestError(str(label_path), "missing annotation file"))
                continue
            try:
                annotations = tuple(load_annotations(label_path))
            except ValueError as exc:
                errors.append(IngestError(str(label_path), f"malformed annotation: {exc}"))
                continue
            if frame not in meta:
                errors.append(IngestError(str(meta_path), f"no meta row for frame {frame!r}"))
                continue

            row = meta[frame]
            samples.append(
                PairedSample(
                    sample_id=sample_id,
                    recording_id=rec_dir.name,
                    frame=frame,
                    rgb_path=rgb_path,
                    lwir_path=lwir_path,
                    label_path=label_path,
                    timestamp_ms=int(row["timestamp_ms"]),
                    lux=float(row["lux"]),
                    color_label=row["color_label"],
                )
            )
    return IngestReport(samples, errors)


MANIFEST_COLUMNS = [
    "sample_id", "recording_id", "frame", "rgb_path", "lwir_path",
    "label_path", "timestamp_ms", "lux", "color_label",
]


def write_sample_manifest(samples: Iterable[PairedSample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for s in samples:
            writer.writerow(
                [s.sample_id, s.recording_id, s.frame, s.rgb_path, s.lwir_path,
                 s.label_path, s.timestamp_ms, repr(s.lux), s.color_label]
            )


def read_sample_manifest(path: str | Path) -> list[PairedSample]:
    samples = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_COLUMNS:
            raise ValueError(
                f"{path}: expected manifest columns {MANIFEST_COLUMNS}, got {reader.fieldnames}"
            )
        for row in reader:
            samples.append(
                PairedSample(
                    sample_id=row["sample_id"],
                    recording_id=row["recording_id"],
                    frame=row["frame"],
                    rgb_path=Path(row["rgb_path"]),
                    lwir_path=Path(row["lwir_path"]),
                    label_path=Path(row["label_path"]),
                    timestamp_ms=int(row["timestamp_ms"]),
                    lux=float(row["lux"]),
                    color_label=row["color_label"],
                )
            )
    return samples


def _split_key(sample_id: str, seed: int) -> bytes:
    return hashlib.sha256(f"{seed}:{sample_id}".encode()).digest()


def split_ids(
    sample_ids: Sequence[str], train_fraction: float = 0.75, seed: int = 0
) -> tuple[list[str], list[str]]:
    """Deterministic train/val partition of sample ids.

    Samples are ordered by a seeded hash of their id and cut at the train
    fraction, so the partition is disjoint, exhaustive, reproducible for a
    given seed, and sized round(fraction * N) to within one sample.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    if not sample_ids:
        raise ValueError("cannot split an empty manifest")
    if len(set(sample_ids)) != len(sample_ids):
        raise ValueError("sample ids must be unique")
    ordered = sorted(sample_ids, key=lambda sid: (_split_key(sid, seed), sid))
    n_train = int(train_fraction * len(ordered) + 0.5)
    return sorted(ordered[:n_train]), sorted(ordered[n_train:])


def split(
    samples: Sequence[PairedSample],
    train_fraction: float = 0.75,
    seed: int = 0,
    group_by_recording: bool = False,
    stratify_by_color: bool = False,
) -> tuple[list[PairedSample], list[PairedSample]]:
    """Partition samples; plain per-sample split by default.

    ``group_by_recording`` keeps whole recordings on one side (prevents
    temporal leakage between adjacent frames); ``stratify_by_color`` splits
    each color's samples independently so the ratio holds per color.  Both
    default off.
    """
    if group_by_recording:
        recording_ids = sorted({s.recording_id for s in samples})
        if not recording_ids:
            raise ValueError("cannot split an empty manifest")
        train_recs, _ = split_ids(recording_ids, train_fraction, seed)
        train_set = set(train_recs)
        train = [s for s in samples if s.recording_id in train_set]
        val = [s for s in samples if s.recording_id not in train_set]
        return train, val
    if stratify_by_color:
        train: list[PairedSample] = []
        val: list[PairedSample] = []
        for color in sorted({s.color_label for s in samples}):
            stratum = [s for s in samples if s.color_label == color]
            s_train, s_val = split(stratum, train_fraction, seed)
            train.extend(s_train)
            val.extend(s_val)
        return train, val
    train_ids, _ = split_ids([s.sample_id for s in samples], train_fraction, seed)
    train_set = set(train_ids)
    train = [s for s in samples if s.sample_id in train_set]
    val = [s for s in samples if s.sample_id not in train_set]
    return train, val


@dataclass
class FuseReport:
    images_written: int
    errors: list[IngestError]


def batch_fuse(
    samples: Iterable[PairedSample],
    levels: Sequence[FusionLevel],
    homography: Homography,
    out_root: str | Path,
) -> FuseReport:
    """Write every sample at every fusion level, with annotations copied 1:1.

    Outputs land at ``out_root/<recording>/<frame>_f<percent>.png`` with the
    annotation file copied byte-for-byte alongside (fusion never moves the
    target, so boxes transfer unchanged).  Per-sample failures are collected
    and the batch continues; re-running produces identical bytes.
    """
    out_root = Path(out_root)
    report = FuseReport(0, [])
    for sample in samples:
        try:
            rgb = read_frame(sample.rgb_path, Modality.RGB, sample.timestamp_ms)
            lwir = read_frame(sample.lwir_path, Modality.LWIR, sample.timestamp_ms)
            registered = register(lwir, homography, rgb.width, rgb.height)
        except (OSError, ValueError) as exc:
            report.errors.append(IngestError(str(sample.rgb_path), f"fusion failed: {exc}"))
            continue
        rec_dir = out_root / sample.recording_id
        rec_dir.mkdir(parents=True, exist_ok=True)
        for level in levels:
            stem = f"{sample.frame}_f{level.rgb_percent}"
            fused = blend(rgb, registered, level)
            write_frame(fused, rec_dir / f"{stem}.png")
            shutil.copyfile(sample.label_path, rec_dir / f"{stem}.txt")
            report.images_written += 1
    return report


@dataclass(frozen=True)
class FusedSample:
    sample_id: str
    rgb_percent: int
    image_path: Path
    label_path: Path
    annotations: tuple[Annotation, ...]


def ingest_fused(out_root: str | Path) -> list[FusedSample]:
    """Re-read a batch_fuse output tree, parsing levels from the filenames."""
    out_root = Path(out_root)
    samples = []
    for image_path in sorted(out_root.glob("*/*_f*.png")):
        stem = image_path.stem
        frame, _, percent = stem.rpartition("_f")
        label_path = image_path.with_suffix(".txt")
        samples.append(
            FusedSample(
                sample_id=f"{image_path.parent.name}/{frame}",
                rgb_percent=int(percent),
                image_path=image_path,
                label_path=label_path,
                annotations=tuple(load_annotations(label_path)),
            )
        )
    return samples


def default_fusion_levels() -> tuple[FusionLevel, ...]:
    return ALL_LEVELS
