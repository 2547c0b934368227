"""Pan/tilt targeting: pixel errors to stepper commands, plus a simulator.

Control law is pure proportional with a pixel deadband and a per-cycle step
saturation.  Pixel errors convert to angles through the field of view
(small-angle linearization; at sub-meter range the trig correction is below
one step), then to whole steps at 360/steps_per_rev degrees each.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .detection import Detection


@dataclass(frozen=True)
class TargetingConfig:
    """Camera geometry and control constants (plausible hardware defaults)."""

    hfov_deg: float = 60.0
    vfov_deg: float = 40.0
    steps_per_rev: int = 3200  # 200 full steps x 16 microstepping
    deadband_px: int = 8
    gain: float = 1.0
    max_steps_per_cycle: int = 200

    def __post_init__(self) -> None:
        if self.hfov_deg <= 0 or self.vfov_deg <= 0:
            raise ValueError("fields of view must be positive")
        if self.steps_per_rev <= 0:
            raise ValueError("steps_per_rev must be positive")
        if self.deadband_px < 0:
            raise ValueError("deadband must be non-negative")
        if not 0.0 < self.gain <= 1.0:
            raise ValueError(f"gain must be in (0, 1], got {self.gain}")
        if self.max_steps_per_cycle <= 0:
            raise ValueError("max_steps_per_cycle must be positive")

    @property
    def deg_per_step(self) -> float:
        return 360.0 / self.steps_per_rev


@dataclass(frozen=True)
class PanTiltCommand:
    pan_steps: int
    tilt_steps: int

    @property
    def is_zero(self) -> bool:
        return self.pan_steps == 0 and self.tilt_steps == 0


@dataclass(frozen=True)
class TurretState:
    """Simulated turret pose; angles derive exactly from step totals."""

    pan_steps_total: int = 0
    tilt_steps_total: int = 0
    steps_per_rev: int = 3200
    history: tuple[PanTiltCommand, ...] = field(default=())

    def angle_deg(self, steps: int) -> float:
        return steps * (360.0 / self.steps_per_rev)

    @property
    def pan_angle_deg(self) -> float:
        return self.angle_deg(self.pan_steps_total)

    @property
    def tilt_angle_deg(self) -> float:
        return self.angle_deg(self.tilt_steps_total)


def target_error(best: Detection, frame_w: int, frame_h: int) -> tuple[float, float]:
    """Signed pixel offset of the detection center from the frame center.

    Positive dx means the target sits right of center, positive dy below.
    """
    cx, cy = best.center
    return (cx - 0.5) * frame_w, (cy - 0.5) * frame_h


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _axis_steps(error_px: float, frame_px: int, fov_deg: float, cfg: TargetingConfig) -> int:
    if abs(error_px) <= cfg.deadband_px:
        return 0
    angle = cfg.gain * error_px / frame_px * fov_deg
    steps = _round_half_away(angle / cfg.deg_per_step)
    return max(-cfg.max_steps_per_cycle, min(cfg.max_steps_per_cycle, steps))


def error_to_command(
    error: tuple[float, float], cfg: TargetingConfig, frame_w: int, frame_h: int
) -> PanTiltCommand:
    """Convert a pixel error into clamped pan/tilt steps.

    Positive steps rotate toward positive error; errors inside the deadband
    command no motion on that axis.
    """
    if cfg.deadband_px >= frame_w / 2 or cfg.deadband_px >= frame_h / 2:
        raise ValueError(
            f"deadband {cfg.deadband_px}px must be below half the frame "
            f"({frame_w}x{frame_h})"
        )
    dx, dy = error
    return PanTiltCommand(
        pan_steps=_axis_steps(dx, frame_w, cfg.hfov_deg, cfg),
        tilt_steps=_axis_steps(dy, frame_h, cfg.vfov_deg, cfg),
    )


def simulate(state: TurretState, cmd: PanTiltCommand, cfg: TargetingConfig) -> TurretState:
    """Apply a command to the simulated turret; pure, history-appending."""
    return TurretState(
        pan_steps_total=state.pan_steps_total + cmd.pan_steps,
        tilt_steps_total=state.tilt_steps_total + cmd.tilt_steps,
        steps_per_rev=cfg.steps_per_rev,
        history=state.history + (cmd,),
    )


class StepperDriver(Protocol):
    """Two-method hardware seam; a GPIO driver can replace the simulator."""

    def issue_steps(self, pan_steps: int, tilt_steps: int) -> None: ...

    def halt(self) -> None: ...


class SimulatedDriver:
    """In-memory StepperDriver that tracks pose exactly like TurretState."""

    def __init__(self, cfg: TargetingConfig):
        self.cfg = cfg
        self.state = TurretState(steps_per_rev=cfg.steps_per_rev)
        self.halted = False

    def issue_steps(self, pan_steps: int, tilt_steps: int) -> None:
        self.state = simulate(self.state, PanTiltCommand(pan_steps, tilt_steps), self.cfg)

    def halt(self) -> None:
        self.halted = True


COMMAND_TRACE_COLUMNS = [
    "cycle", "frame_id", "dx_px", "dy_px",
    "pan_steps", "tilt_steps", "pan_angle_deg", "tilt_angle_deg",
]


@dataclass(frozen=True)
class CommandRecord:
    cycle: int
    frame_id: str
    dx_px: float
    dy_px: float
    pan_steps: int
    tilt_steps: int
    pan_angle_deg: float
    tilt_angle_deg: float


def write_command_trace(records: Iterable[CommandRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMMAND_TRACE_COLUMNS)
        for r in records:
            writer.writerow(
                [r.cycle, r.frame_id, repr(r.dx_px), repr(r.dy_px),
                 r.pan_steps, r.tilt_steps, repr(r.pan_angle_deg), repr(r.tilt_angle_deg)]
            )
