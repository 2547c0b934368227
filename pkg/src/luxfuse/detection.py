"""Detection data model, pluggable backends, and the spurious-frame filter."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, runtime_checkable

import numpy as np

from .frames import Frame
from .illumination import IlluminationCategory
from .registry import Registry

MUG_CLASS_ID = 0


class MockTableError(KeyError):
    """Raised when the mock confidence table has no entry for a lookup."""


@dataclass(frozen=True)
class Detection:
    """One detected box: class, confidence, and a normalized (cx, cy, w, h)."""

    class_id: int
    confidence: float
    bbox: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if len(self.bbox) != 4:
            raise ValueError(f"bbox must have 4 elements, got {self.bbox}")
        if any(not 0.0 <= v <= 1.0 for v in self.bbox):
            raise ValueError(f"bbox values must be in [0, 1], got {self.bbox}")

    @property
    def center(self) -> tuple[float, float]:
        return self.bbox[0], self.bbox[1]


@dataclass(frozen=True)
class DetectionResult:
    """All detections one backend call produced for one frame."""

    frame_id: str
    model_id: str
    detections: tuple[Detection, ...]
    inference_ms: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "detections", tuple(self.detections))
        if self.inference_ms < 0:
            raise ValueError(f"inference_ms must be non-negative, got {self.inference_ms}")

    def best(self) -> Detection | None:
        """Highest-confidence detection, or None when the frame is empty."""
        if not self.detections:
            return None
        return max(self.detections, key=lambda d: d.confidence)


@runtime_checkable
class DetectorBackend(Protocol):
    def detect(
        self, frame: Frame, model_id: str, *, frame_id: str | None = None, lux: float = 0.0
    ) -> DetectionResult:
        ...


@dataclass(frozen=True)
class GroundTruth:
    """The annotated target a mock backend echoes back."""

    bbox: tuple[float, float, float, float]
    color_label: str


TruthLookup = Callable[[str], GroundTruth]

# Confidence table key: (fusion rgb percent, model category, target color).
MockTable = Mapping[tuple[int, IlluminationCategory, str], float]


class MockDetector:
    """Deterministic test backend that returns the ground-truth box.

    The confidence comes from a fixture table keyed by the queried model's
    fusion level and category plus the target color; optional Gaussian noise
    (clamped to [0, 1]) is seeded per (seed, model_id, frame_id) so repeated
    calls with the same inputs give identical results.
    """

    def __init__(
        self,
        levels_by_model: Mapping[str, tuple[int, IlluminationCategory]],
        table: MockTable,
        truth: GroundTruth | TruthLookup,
        noise_sigma: float = 0.0,
        seed: int = 0,
    ):
        self._levels_by_model = dict(levels_by_model)
        self._table = dict(table)
        self._truth = truth
        self._noise_sigma = noise_sigma
        self._seed = seed

    @classmethod
    def from_registry(
        cls,
        registry: Registry,
        table: MockTable,
        truth: GroundTruth | TruthLookup,
        noise_sigma: float = 0.0,
        seed: int = 0,
    ) -> "MockDetector":
        levels = {
            rec.model_id: (rec.fusion_level.rgb_percent, rec.category)
            for rec in registry.fine_tuned()
        }
        return cls(levels, table, truth, noise_sigma=noise_sigma, seed=seed)

    def _lookup_truth(self, frame_id: str) -> GroundTruth:
        if callable(self._truth):
            return self._truth(frame_id)
        return self._truth

    def detect(
        self, frame: Frame, model_id: str, *, frame_id: str | None = None, lux: float = 0.0
    ) -> DetectionResult:
        fid = frame_id if frame_id is not None else str(frame.timestamp_ms)
        if model_id not in self._levels_by_model:
            raise MockTableError(f"mock has no level/category mapping for model {model_id!r}")
        rgb_percent, category = self._levels_by_model[model_id]
        truth = self._lookup_truth(fid)
        key = (rgb_percent, category, truth.color_label)
        if key not in self._table:
            raise MockTableError(
                f"mock confidence table has no entry for level {rgb_percent}, "
                f"category {category.value}, color {truth.color_label!r}"
            )
        confidence = float(self._table[key])
        if self._noise_sigma > 0.0:
            digest = hashlib.sha256(f"{self._seed}|{model_id}|{fid}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            confidence += rng.normal(0.0, self._noise_sigma)
            confidence = min(1.0, max(0.0, confidence))
        det = Detection(MUG_CLASS_ID, confidence, truth.bbox)
        return DetectionResult(fid, model_id, (det,), inference_ms=0.0)


def iou(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection-over-union of two (cx, cy, w, h) boxes."""
    ax0, ax1 = a[0] - a[2] / 2, a[0] + a[2] / 2
    ay0, ay1 = a[1] - a[3] / 2, a[1] + a[3] / 2
    bx0, bx1 = b[0] - b[2] / 2, b[0] + b[2] / 2
    by0, by1 = b[1] - b[3] / 2, b[1] + b[3] / 2
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a[2] * a[3] + b[2] * b[3] - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class SpuriousPolicy:
    """Knobs for the spurious-detection filter.

    The defaults are engineering placeholders, not measured values; all three
    belong in the run config.  A frame's best detection is dropped when its
    confidence is below the floor, or when its center jumps farther than
    ``max_jump`` (normalized Euclidean distance) from the last retained box
    while overlapping it by less than ``iou_floor``.
    """

    confidence_floor: float = 0.25
    max_jump: float = 0.3
    iou_floor: float = 0.05


RULE_CONFIDENCE_FLOOR = "confidence_floor"
RULE_CENTER_JUMP = "center_jump"


@dataclass(frozen=True)
class Exclusion:
    frame_id: str
    rule: str
    detail: str


class SpuriousFilter:
    """Sequential form of the filter, usable frame-by-frame in the pipeline."""

    def __init__(self, policy: SpuriousPolicy):
        self.policy = policy
        self._last_retained: Detection | None = None

    def observe(self, result: DetectionResult) -> tuple[bool, Exclusion | None]:
        """Judge one time-ordered result; returns (retained, exclusion)."""
        best = result.best()
        if best is None:
            return True, None
        if best.confidence < self.policy.confidence_floor:
            return False, Exclusion(
                result.frame_id,
                RULE_CONFIDENCE_FLOOR,
                f"confidence {best.confidence!r} below floor {self.policy.confidence_floor!r}",
            )
        if self._last_retained is not None:
            jump = math.dist(best.center, self._last_retained.center)
            if jump > self.policy.max_jump:
                overlap = iou(best.bbox, self._last_retained.bbox)
                if overlap < self.policy.iou_floor:
                    return False, Exclusion(
                        result.frame_id,
                        RULE_CENTER_JUMP,
                        f"center jumped {jump:.4f} > {self.policy.max_jump!r} "
                        f"with IoU {overlap:.4f} < {self.policy.iou_floor!r}",
                    )
        self._last_retained = best
        return True, None


def filter_spurious(
    results: Iterable[DetectionResult], policy: SpuriousPolicy
) -> tuple[list[DetectionResult], list[Exclusion]]:
    """Drop clearly spurious frames from a time-ordered result sequence.

    Retained results are the original objects in their original order; every
    exclusion is logged with the rule that triggered it.
    """
    filt = SpuriousFilter(policy)
    retained: list[DetectionResult] = []
    exclusions: list[Exclusion] = []
    for result in results:
        keep, exclusion = filt.observe(result)
        if keep:
            retained.append(result)
        else:
            assert exclusion is not None
            exclusions.append(exclusion)
    return retained, exclusions


DETECTION_LOG_COLUMNS = [
    "frame_id",
    "timestamp_ms",
    "model_id",
    "class_id",
    "confidence",
    "cx",
    "cy",
    "w",
    "h",
    "excluded",
    "exclusion_rule",
]


@dataclass(frozen=True)
class DetectionLogRow:
    """One detection-log line: a frame's best detection, or a no-detection mark."""

    frame_id: str
    timestamp_ms: int
    model_id: str
    detection: Detection | None
    excluded: bool = False
    exclusion_rule: str = ""


def write_detection_log(rows: Iterable[DetectionLogRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DETECTION_LOG_COLUMNS)
        for row in rows:
            det = row.detection
            if det is None:
                fields = ["", "", "", "", "", ""]
            else:
                fields = [
                    det.class_id,
                    repr(det.confidence),
                    repr(det.bbox[0]),
                    repr(det.bbox[1]),
                    repr(det.bbox[2]),
                    repr(det.bbox[3]),
                ]
            writer.writerow(
                [row.frame_id, row.timestamp_ms, row.model_id, *fields,
                 "1" if row.excluded else "0", row.exclusion_rule]
            )


def read_detection_log(path: str | Path) -> list[DetectionLogRow]:
    rows: list[DetectionLogRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DETECTION_LOG_COLUMNS:
            raise ValueError(
                f"{path}: expected detection log columns {DETECTION_LOG_COLUMNS}, "
                f"got {reader.fieldnames}"
            )
        for raw in reader:
            detection = None
            if raw["confidence"] != "":
                detection = Detection(
                    int(raw["class_id"]),
                    float(raw["confidence"]),
                    (float(raw["cx"]), float(raw["cy"]), float(raw["w"]), float(raw["h"])),
                )
            rows.append(
                DetectionLogRow(
                    frame_id=raw["frame_id"],
                    timestamp_ms=int(raw["timestamp_ms"]),
                    model_id=raw["model_id"],
                    detection=detection,
                    excluded=raw["excluded"] == "1",
                    exclusion_rule=raw["exclusion_rule"],
                )
            )
    return rows
