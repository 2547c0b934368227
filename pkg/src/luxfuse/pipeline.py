"""The live loop: categorize, switch models, fuse, detect, filter, actuate, log.

The same loop runs in two modes.  The single-threaded mode processes each
(rgb, lwir, lux) tuple to completion before the next and is byte-deterministic
given the source, config, and seed.  The threaded mode splits capture,
inference, and actuation into stages joined by bounded latest-wins channels:
a stage that falls behind drops stale items (counted in the log) instead of
queueing lag.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .dataset import ingest, load_annotations
from .detection import (
    DetectionLogRow,
    DetectionResult,
    DetectorBackend,
    GroundTruth,
    SpuriousFilter,
    SpuriousPolicy,
    write_detection_log,
)
from .frames import Frame, Modality, read_frame
from .fusion import blend
from .illumination import IlluminationCategory, LuxReading, SwitchState, step
from .protocol import DetectorError
from .registration import Homography, register
from .registry import Registry
from .turret import (
    CommandRecord,
    StepperDriver,
    TargetingConfig,
    TurretState,
    error_to_command,
    simulate,
    target_error,
    write_command_trace,
)

DEFAULT_ACTIVE_MODELS: dict[IlluminationCategory, str] = {
    IlluminationCategory.FULL_LIGHT: "f080_full_light",
    IlluminationCategory.DIM_LIGHT: "f090_dim_light",
    IlluminationCategory.NO_LIGHT: "f040_no_light",
}


class PipelineConfigError(ValueError):
    """Raised when the pipeline configuration is inconsistent."""


@dataclass(frozen=True)
class SourceTuple:
    """One synchronized capture: frame pair, lux sample, and context."""

    frame_id: str
    rgb: Frame
    lwir: Frame
    lux: float
    timestamp_ms: int
    color_label: str = ""


@dataclass
class PipelineConfig:
    registry: Registry
    backend: DetectorBackend
    active_models: Mapping[IlluminationCategory, str] = field(
        default_factory=lambda: dict(DEFAULT_ACTIVE_MODELS)
    )
    homography: Homography = field(default_factory=Homography.identity)
    spurious: SpuriousPolicy = field(default_factory=SpuriousPolicy)
    targeting: TargetingConfig = field(default_factory=TargetingConfig)
    trial_duration_s: float | None = 10.0
    hysteresis_margin: float = 0.0

    def __post_init__(self) -> None:
        for category in IlluminationCategory:
            if category not in self.active_models:
                raise PipelineConfigError(f"no active model configured for {category.value}")
            model_id = self.active_models[category]
            if model_id not in self.registry:
                raise PipelineConfigError(
                    f"active model {model_id!r} for {category.value} is not in the registry"
                )
            record = self.registry.get(model_id)
            if record.category is not None and record.category is not category:
                raise PipelineConfigError(
                    f"active model {model_id!r} is a {record.category.value} model, "
                    f"configured for {category.value}"
                )


@dataclass
class SwitchRecord:
    timestamp_ms: int
    old_category: str
    new_category: str
    old_model: str
    new_model: str


@dataclass
class TrialLog:
    """Everything one trial produced, in processing order."""

    detection_rows: list[DetectionLogRow] = field(default_factory=list)
    switches: list[SwitchRecord] = field(default_factory=list)
    commands: list[CommandRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    models_used: list[str] = field(default_factory=list)
    drops: int = 0

    def write_detection_csv(self, path: str | Path) -> None:
        write_detection_log(self.detection_rows, path)

    def write_command_csv(self, path: str | Path) -> None:
        write_command_trace(self.commands, path)

    def write_events_ndjson(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for event in self.events:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def retained_confidences(self) -> list[float]:
        return [
            row.detection.confidence
            for row in self.detection_rows
            if row.detection is not None and not row.excluded
        ]


class _FrameProcessor:
    """Shared per-frame logic for both execution modes."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.switch_state = SwitchState(hysteresis_margin=cfg.hysteresis_margin)
        self.spurious = SpuriousFilter(cfg.spurious)
        self.active_model_id: str | None = None
        self.log = TrialLog()

    def _swap_model(self, category: IlluminationCategory, timestamp_ms: int, old) -> None:
        new_model = self.cfg.active_models[category]
        self.log.switches.append(
            SwitchRecord(
                timestamp_ms=timestamp_ms,
                old_category="" if old is None else old.value,
                new_category=category.value,
                old_model=self.active_model_id or "",
                new_model=new_model,
            )
        )
        self.log.events.append(
            {
                "event_type": "switch",
                "timestamp_ms": timestamp_ms,
                "old_category": None if old is None else old.value,
                "new_category": category.value,
                "old_model": self.active_model_id,
                "new_model": new_model,
            }
        )
        self.active_model_id = new_model
        if new_model not in self.log.models_used:
            self.log.models_used.append(new_model)

    def infer(self, item: SourceTuple) -> tuple[DetectionLogRow, Frame]:
        """Illumination step, fusion, detection, and spurious filtering."""
        old = self.switch_state.current
        self.switch_state, event = step(
            self.switch_state, LuxReading(item.lux, item.timestamp_ms)
        )
        if event is not None:
            self._swap_model(event.new, item.timestamp_ms, old)
        assert self.active_model_id is not None
        record = self.cfg.registry.get(self.active_model_id)

        registered = register(item.lwir, self.cfg.homography, item.rgb.width, item.rgb.height)
        fused = blend(item.rgb, registered, record.fusion_level)
        self.log.events.append(
            {
                "event_type": "frame",
                "frame_id": item.frame_id,
                "timestamp_ms": item.timestamp_ms,
                "lux": item.lux,
                "category": self.switch_state.current.value,
                "model_id": self.active_model_id,
                "fusion_rgb_percent": record.fusion_level.rgb_percent,
            }
        )

        try:
            result = self.cfg.backend.detect(
                fused, self.active_model_id, frame_id=item.frame_id, lux=item.lux
            )
        except DetectorError as exc:
            self.log.events.append(
                {"event_type": "error", "frame_id": item.frame_id, "message": str(exc)}
            )
            result = DetectionResult(item.frame_id, self.active_model_id, ())

        retained, exclusion = self.spurious.observe(result)
        best = result.best()
        row = DetectionLogRow(
            frame_id=item.frame_id,
            timestamp_ms=item.timestamp_ms,
            model_id=self.active_model_id,
            detection=best,
            excluded=not retained,
            exclusion_rule="" if exclusion is None else exclusion.rule,
        )
        self.log.detection_rows.append(row)
        self.log.events.append(
            {
                "event_type": "detection",
                "frame_id": item.frame_id,
                "model_id": self.active_model_id,
                "confidence": None if best is None else best.confidence,
                "bbox": None if best is None else list(best.bbox),
                "excluded": not retained,
                "exclusion_rule": None if exclusion is None else exclusion.rule,
                "inference_ms": result.inference_ms,
            }
        )
        return row, fused


class _Actuator:
    """Turret side of the loop; logs exact pose, steps any attached driver."""

    def __init__(self, cfg: PipelineConfig, log: TrialLog, driver: StepperDriver | None = None):
        self.cfg = cfg
        self.log = log
        self.driver = driver
        self.state = TurretState(steps_per_rev=cfg.targeting.steps_per_rev)
        self.cycle = 0

    def actuate(self, row: DetectionLogRow, fused: Frame) -> None:
        if row.detection is None or row.excluded:
            return
        dx, dy = target_error(row.detection, fused.width, fused.height)
        cmd = error_to_command((dx, dy), self.cfg.targeting, fused.width, fused.height)
        if self.driver is not None:
            self.driver.issue_steps(cmd.pan_steps, cmd.tilt_steps)
        self.state = simulate(self.state, cmd, self.cfg.targeting)
        record = CommandRecord(
            cycle=self.cycle,
            frame_id=row.frame_id,
            dx_px=dx,
            dy_px=dy,
            pan_steps=cmd.pan_steps,
            tilt_steps=cmd.tilt_steps,
            pan_angle_deg=self.state.pan_angle_deg,
            tilt_angle_deg=self.state.tilt_angle_deg,
        )
        self.cycle += 1
        self.log.commands.append(record)
        self.log.events.append(
            {
                "event_type": "command",
                "frame_id": row.frame_id,
                "dx_px": dx,
                "dy_px": dy,
                "pan_steps": cmd.pan_steps,
                "tilt_steps": cmd.tilt_steps,
                "pan_angle_deg": self.state.pan_angle_deg,
                "tilt_angle_deg": self.state.tilt_angle_deg,
            }
        )


def _within_duration(cfg: PipelineConfig, first_ts: int | None, ts: int) -> bool:
    if cfg.trial_duration_s is None or first_ts is None:
        return True
    return (ts - first_ts) < cfg.trial_duration_s * 1000.0


def run_trial(
    source: Iterable[SourceTuple],
    cfg: PipelineConfig,
    driver: StepperDriver | None = None,
) -> TrialLog:
    """Process a source to exhaustion in deterministic single-threaded mode.

    Every tuple yields exactly one detection-log row and at most one command
    row; backend failures are logged and treated as empty detections.  Pass a
    hardware ``driver`` to step real motors alongside the logged simulation.
    """
    processor = _FrameProcessor(cfg)
    actuator = _Actuator(cfg, processor.log, driver)
    first_ts: int | None = None
    for item in source:
        if first_ts is None:
            first_ts = item.timestamp_ms
        elif not _within_duration(cfg, first_ts, item.timestamp_ms):
            break
        row, fused = processor.infer(item)
        actuator.actuate(row, fused)
    return processor.log


_CLOSED = object()


class LatestWinsChannel:
    """Capacity-one channel where a new put replaces an unconsumed item."""

    def __init__(self):
        self._lock = threading.Condition()
        self._item = None
        self._has_item = False
        self._closed = False
        self.dropped = 0

    def put(self, item) -> None:
        with self._lock:
            if self._has_item:
                self.dropped += 1
            self._item = item
            self._has_item = True
            self._lock.notify()

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._lock.notify_all()

    def get(self):
        with self._lock:
            while not self._has_item and not self._closed:
                self._lock.wait()
            if self._has_item:
                item = self._item
                self._item = None
                self._has_item = False
                return item
            return _CLOSED


def run_trial_threaded(
    source: Iterable[SourceTuple],
    cfg: PipelineConfig,
    driver: StepperDriver | None = None,
) -> TrialLog:
    """Three-stage latest-wins execution of the same loop.

    Stale frames and stale actuation inputs are dropped, not queued; the drop
    count lands in the log.  Output ordering matches processing order but the
    set of processed frames depends on timing, so this mode is not
    byte-deterministic.
    """
    processor = _FrameProcessor(cfg)
    actuator = _Actuator(cfg, processor.log, driver)
    capture_chan = LatestWinsChannel()
    actuate_chan = LatestWinsChannel()

    def capture_stage():
        first_ts = None
        for item in source:
            if first_ts is None:
                first_ts = item.timestamp_ms
            elif not _within_duration(cfg, first_ts, item.timestamp_ms):
                break
            capture_chan.put(item)
        capture_chan.close()

    def inference_stage():
        while True:
            item = capture_chan.get()
            if item is _CLOSED:
                break
            actuate_chan.put(processor.infer(item))
        actuate_chan.close()

    def actuation_stage():
        while True:
            pair = actuate_chan.get()
            if pair is _CLOSED:
                break
            actuator.actuate(*pair)

    threads = [
        threading.Thread(target=capture_stage, name="capture"),
        threading.Thread(target=inference_stage, name="inference"),
        threading.Thread(target=actuation_stage, name="actuation"),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    processor.log.drops = capture_chan.dropped + actuate_chan.dropped
    for _ in range(capture_chan.dropped + actuate_chan.dropped):
        processor.log.events.append({"event_type": "drop"})
    return processor.log


class ReplaySource:
    """Iterable over a recording directory in the dataset layout.

    Also exposes per-frame ground truth (first annotation plus color label),
    which mock backends use as their truth lookup.
    """

    def __init__(self, root: str | Path, recording_id: str | None = None):
        report = ingest(root)
        if report.errors:
            problems = "; ".join(f"{e.path}: {e.message}" for e in report.errors[:5])
            raise ValueError(f"replay source has invalid pairs: {problems}")
        samples = report.samples
        if recording_id is not None:
            samples = [s for s in samples if s.recording_id == recording_id]
        if not samples:
            raise ValueError(f"replay source {root} has no samples")
        self.samples = sorted(samples, key=lambda s: (s.recording_id, s.timestamp_ms, s.frame))
        self._truth: dict[str, GroundTruth] = {}
        for s in self.samples:
            anns = load_annotations(s.label_path)
            if anns:
                self._truth[s.sample_id] = GroundTruth(anns[0].bbox, s.color_label)

    def ground_truth(self, frame_id: str) -> GroundTruth:
        return self._truth[frame_id]

    def __iter__(self) -> Iterator[SourceTuple]:
        for s in self.samples:
            yield SourceTuple(
                frame_id=s.sample_id,
                rgb=read_frame(s.rgb_path, Modality.RGB, s.timestamp_ms),
                lwir=read_frame(s.lwir_path, Modality.LWIR, s.timestamp_ms),
                lux=s.lux,
                timestamp_ms=s.timestamp_ms,
                color_label=s.color_label,
            )
