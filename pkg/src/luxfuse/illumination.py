"""Lux-driven illumination categories and the model-switching state machine.

Categories partition the non-negative lux axis: full-light above 1000 lux,
dim-light from 10 to 1000 lux inclusive, no-light below 10 lux.  Switching
follows the latest reading deterministically; an optional hysteresis margin
requires a reading to clear the departing threshold by more than the margin
before a switch fires, which suppresses sensor jitter right at a boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

FULL_LIGHT_THRESHOLD_LUX = 1000.0
NO_LIGHT_THRESHOLD_LUX = 10.0


class IlluminationCategory(Enum):
    FULL_LIGHT = "full_light"
    DIM_LIGHT = "dim_light"
    NO_LIGHT = "no_light"

    @classmethod
    def from_value(cls, value: str) -> "IlluminationCategory":
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f"unknown illumination category {value!r}")


def categorize(lux: float) -> IlluminationCategory:
    """Map a lux value to its illumination category.

    Boundary readings of exactly 10 and 1000 lux are dim-light; full-light
    requires strictly more than 1000 lux.
    """
    if lux < 0:
        raise ValueError(f"lux must be non-negative, got {lux}")
    if lux > FULL_LIGHT_THRESHOLD_LUX:
        return IlluminationCategory.FULL_LIGHT
    if lux >= NO_LIGHT_THRESHOLD_LUX:
        return IlluminationCategory.DIM_LIGHT
    return IlluminationCategory.NO_LIGHT


@dataclass(frozen=True)
class LuxReading:
    lux: float
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        if self.lux < 0:
            raise ValueError(f"lux must be non-negative, got {self.lux}")


@dataclass(frozen=True)
class SwitchEvent:
    """A category transition; ``old`` is None for the initialization event."""

    old: IlluminationCategory | None
    new: IlluminationCategory
    timestamp_ms: int


@dataclass(frozen=True)
class SwitchState:
    """Immutable snapshot of the switching machine.

    With ``hysteresis_margin`` 0 the machine is a pure function of the latest
    reading: the current category always equals ``categorize(lux)``.
    """

    current: IlluminationCategory | None = None
    hysteresis_margin: float = 0.0
    last_switch_ms: int | None = None

    def __post_init__(self) -> None:
        if self.hysteresis_margin < 0:
            raise ValueError(f"hysteresis margin must be non-negative, got {self.hysteresis_margin}")


def _clears_departure(current: IlluminationCategory, lux: float, margin: float) -> bool:
    """Whether a reading clears the current category's boundary by > margin.

    At margin 0 each condition reduces to the plain categorize() boundary,
    so the zero-margin machine tracks the pointwise categorization exactly.
    """
    if current is IlluminationCategory.FULL_LIGHT:
        return lux <= FULL_LIGHT_THRESHOLD_LUX - margin
    if current is IlluminationCategory.NO_LIGHT:
        return lux >= NO_LIGHT_THRESHOLD_LUX + margin
    return lux > FULL_LIGHT_THRESHOLD_LUX + margin or lux < NO_LIGHT_THRESHOLD_LUX - margin


def step(state: SwitchState, reading: LuxReading) -> tuple[SwitchState, SwitchEvent | None]:
    """Advance the machine by one reading, emitting a SwitchEvent on change.

    The first reading always initializes the machine and emits an event with
    ``old=None``.
    """
    target = categorize(reading.lux)
    if state.current is None:
        event = SwitchEvent(None, target, reading.timestamp_ms)
        return replace(state, current=target, last_switch_ms=reading.timestamp_ms), event
    if target is state.current:
        return state, None
    if not _clears_departure(state.current, reading.lux, state.hysteresis_margin):
        return state, None
    event = SwitchEvent(state.current, target, reading.timestamp_ms)
    return replace(state, current=target, last_switch_ms=reading.timestamp_ms), event


def replay_switches(
    readings: list[LuxReading], hysteresis_margin: float = 0.0
) -> list[SwitchEvent]:
    """Run a whole lux trace through the machine and collect the events."""
    state = SwitchState(hysteresis_margin=hysteresis_margin)
    events: list[SwitchEvent] = []
    for reading in readings:
        state, event = step(state, reading)
        if event is not None:
            events.append(event)
    return events


def load_lux_trace(path: str | Path) -> list[LuxReading]:
    """Read a lux trace CSV with columns timestamp_ms,lux."""
    readings: list[LuxReading] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"timestamp_ms", "lux"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns timestamp_ms,lux, got {reader.fieldnames}")
        for row in reader:
            readings.append(LuxReading(float(row["lux"]), int(row["timestamp_ms"])))
    return readings


def write_lux_trace(readings: list[LuxReading], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp_ms", "lux"])
        for r in readings:
            writer.writerow([r.timestamp_ms, repr(r.lux)])
