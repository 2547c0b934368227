"""Trial statistics: per-trial means, SEM, aggregations, deltas, exports.

The headline metric is mean detection confidence per trial, the average
confidence across the frames where the target was detected (after the
spurious filter).  Variability across the six color-trials of a condition is
summarized by the population standard deviation by default (``ddof=0``; a
config flag flips to the sample convention) and reported as the standard
error of the mean, std/sqrt(n).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .detection import read_detection_log
from .illumination import IlluminationCategory
from .registry import (
    CohortStats,
    Registry,
    build_cohort,
    rank,
    write_rankings_csv,
)

logger = logging.getLogger(__name__)

COLOR_LABELS = ("white", "black", "orange", "blue", "teal", "yellow")
HELD_OUT_COLORS = frozenset({"teal", "yellow"})


@dataclass(frozen=True)
class Trial:
    """One tracking run of one model against one mug color."""

    trial_id: str
    model_id: str
    category: IlluminationCategory
    color_label: str
    confidences: tuple[float, ...]
    held_out: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "confidences", tuple(self.confidences))
        if any(not 0.0 <= c <= 1.0 for c in self.confidences):
            raise ValueError(f"trial {self.trial_id}: confidences must be in [0, 1]")
        expected_held_out = self.color_label in HELD_OUT_COLORS
        if self.held_out != expected_held_out:
            raise ValueError(
                f"trial {self.trial_id}: held_out={self.held_out} inconsistent "
                f"with color {self.color_label!r}"
            )

    @property
    def detected(self) -> bool:
        return len(self.confidences) > 0


def trial_mean(trial: Trial) -> float:
    """Average confidence across the trial's detected frames."""
    if not trial.confidences:
        raise ValueError(f"trial {trial.trial_id} has no detected frames to average")
    return sum(trial.confidences) / len(trial.confidences)


def std(values: Sequence[float], ddof: int = 0) -> float:
    """Standard deviation; population convention (ddof=0) by default."""
    n = len(values)
    if n == 0 or n - ddof <= 0:
        raise ValueError(f"need more than {ddof} values for std with ddof={ddof}")
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - ddof))


def sem(std_value: float, n: int) -> float:
    """Standard error of the mean: std / sqrt(n)."""
    if n < 1:
        raise ValueError(f"sem needs n >= 1, got {n}")
    if std_value < 0:
        raise ValueError(f"std must be non-negative, got {std_value}")
    return std_value / math.sqrt(n)


@dataclass(frozen=True)
class TrialStats:
    """Mean/std/SEM over one aggregation unit of n values."""

    mean: float
    std: float
    sem: float
    n: int

    @classmethod
    def from_values(cls, values: Sequence[float], ddof: int = 0) -> "TrialStats":
        if not values:
            raise ValueError("cannot summarize an empty value list")
        s = std(values, ddof=ddof)
        return cls(
            mean=sum(values) / len(values),
            std=s,
            sem=sem(s, len(values)),
            n=len(values),
        )


def round_half_away(value: float, ndigits: int = 2) -> float:
    """Round with ties away from zero (table-style percent rounding)."""
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ColorAggregate:
    color: str
    mean: float
    percent: float  # mean as percent, rounded half-away to 2 decimals
    n_trials: int


def aggregate_by_color(trials: Iterable[Trial]) -> list[ColorAggregate]:
    """Unweighted mean of trial means per color, over every model-condition.

    Rows come back sorted by descending mean (label order on ties); canonical
    colors with no detected trials are logged and omitted.
    """
    means_by_color: dict[str, list[float]] = {}
    for trial in trials:
        if not trial.detected:
            continue
        means_by_color.setdefault(trial.color_label, []).append(trial_mean(trial))
    for color in COLOR_LABELS:
        if color not in means_by_color:
            logger.warning("color %r has no detected trials; omitting from color table", color)
    rows = [
        ColorAggregate(
            color=color,
            mean=sum(values) / len(values),
            percent=round_half_away(100.0 * sum(values) / len(values), 2),
            n_trials=len(values),
        )
        for color, values in means_by_color.items()
    ]
    rows.sort(key=lambda r: (-r.mean, r.color))
    return rows


@dataclass(frozen=True)
class CellStats:
    """Per (fusion level, category) statistics across color-trials."""

    rgb_percent: int
    category: IlluminationCategory
    mean: float
    std: float
    sem: float
    n_trials: int
    n_total: int  # including undetected trials, for coverage reporting


def aggregate_by_fusion_category(
    trials: Iterable[Trial],
    levels_by_model: Mapping[str, int],
    ddof: int = 0,
) -> dict[tuple[int, IlluminationCategory], CellStats]:
    """Mean/std/SEM of trial means per (fusion level, category) cell.

    Undetected trials are excluded from the statistics but counted in the
    cell's coverage total.
    """
    detected: dict[tuple[int, IlluminationCategory], list[float]] = {}
    totals: dict[tuple[int, IlluminationCategory], int] = {}
    for trial in trials:
        key = (levels_by_model[trial.model_id], trial.category)
        totals[key] = totals.get(key, 0) + 1
        if trial.detected:
            detected.setdefault(key, []).append(trial_mean(trial))
    if not detected:
        raise ValueError("no detected trials to aggregate")
    cells: dict[tuple[int, IlluminationCategory], CellStats] = {}
    for key, values in detected.items():
        s = std(values, ddof=ddof)
        cells[key] = CellStats(
            rgb_percent=key[0],
            category=key[1],
            mean=sum(values) / len(values),
            std=s,
            sem=sem(s, len(values)),
            n_trials=len(values),
            n_total=totals[key],
        )
    return cells


@dataclass(frozen=True)
class DeltaReport:
    """Absolute (percentage-point) and relative (%) gap between two means."""

    absolute: float
    relative_pct: float | None


def delta_report(a_mean: float, b_mean: float) -> DeltaReport:
    absolute = a_mean - b_mean
    if b_mean == 0.0:
        return DeltaReport(absolute, None)
    return DeltaReport(absolute, absolute / b_mean * 100.0)


def quintile_tiers(values: Sequence[float]) -> list[int]:
    """Assign each value a quintile tier 1..5 within its panel.

    Thresholds are the 20/40/60/80th percentiles (linear interpolation); a
    value's tier is one plus the number of thresholds it strictly exceeds,
    so tied values always share a tier and n divisible by 5 distinct values
    split exactly evenly.
    """
    if not values:
        return []
    thresholds = [_percentile(values, p) for p in (20.0, 40.0, 60.0, 80.0)]
    return [1 + sum(v > t for t in thresholds) for v in values]


def _percentile(values: Sequence[float], p: float) -> float:
    ordered = sorted(values)
    if len(ordered) == 1:
        return ordered[0]
    rank_pos = p / 100.0 * (len(ordered) - 1)
    lo = math.floor(rank_pos)
    hi = min(lo + 1, len(ordered) - 1)
    frac = rank_pos - lo
    return ordered[lo] + frac * (ordered[hi] - ordered[lo])


@dataclass(frozen=True)
class HeatmapRow:
    category: IlluminationCategory
    color: str
    rgb_percent: int
    mean: float
    quintile: int


def heatmap_rows(
    trials: Iterable[Trial], levels_by_model: Mapping[str, int]
) -> list[HeatmapRow]:
    """Long-format (category, color, level) cell means with per-panel quintiles."""
    cell_means: dict[tuple[IlluminationCategory, str, int], list[float]] = {}
    for trial in trials:
        if not trial.detected:
            logger.warning("trial %s has no detections; omitting heatmap cell", trial.trial_id)
            continue
        key = (trial.category, trial.color_label, levels_by_model[trial.model_id])
        cell_means.setdefault(key, []).append(trial_mean(trial))

    rows: list[HeatmapRow] = []
    for category in IlluminationCategory:
        panel = sorted(
            (key, sum(v) / len(v)) for key, v in cell_means.items() if key[0] is category
        )
        if not panel:
            continue
        tiers = quintile_tiers([mean for _, mean in panel])
        for ((_, color, level), mean), tier in zip(panel, tiers):
            rows.append(HeatmapRow(category, color, level, mean, tier))
    return rows


# --- trial manifest and log ingestion ---------------------------------------

TRIAL_MANIFEST_COLUMNS = ["trial_id", "model_id", "category", "color", "held_out"]


@dataclass(frozen=True)
class TrialManifestRow:
    trial_id: str
    model_id: str
    category: IlluminationCategory
    color: str
    held_out: bool


def read_trial_manifest(path: str | Path) -> list[TrialManifestRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRIAL_MANIFEST_COLUMNS:
            raise ValueError(
                f"{path}: expected trial manifest columns {TRIAL_MANIFEST_COLUMNS}, "
                f"got {reader.fieldnames}"
            )
        for raw in reader:
            rows.append(
                TrialManifestRow(
                    trial_id=raw["trial_id"],
                    model_id=raw["model_id"],
                    category=IlluminationCategory.from_value(raw["category"]),
                    color=raw["color"],
                    held_out=raw["held_out"] == "true",
                )
            )
    return rows


def write_trial_manifest(rows: Iterable[TrialManifestRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_MANIFEST_COLUMNS)
        for r in rows:
            writer.writerow(
                [r.trial_id, r.model_id, r.category.value, r.color, "true" if r.held_out else "false"]
            )


def load_trials(logs_dir: str | Path, manifest_path: str | Path) -> list[Trial]:
    """Build trials by joining the manifest with per-trial detection logs.

    Each manifest row expects ``<logs_dir>/<trial_id>.csv``; confidences are
    the retained (non-excluded) detections in log order.
    """
    logs_dir = Path(logs_dir)
    trials = []
    for row in read_trial_manifest(manifest_path):
        log_path = logs_dir / f"{row.trial_id}.csv"
        if not log_path.exists():
            raise FileNotFoundError(f"missing detection log for trial {row.trial_id}: {log_path}")
        confidences = [
            r.detection.confidence
            for r in read_detection_log(log_path)
            if r.detection is not None and not r.excluded
        ]
        trials.append(
            Trial(
                trial_id=row.trial_id,
                model_id=row.model_id,
                category=row.category,
                color_label=row.color,
                confidences=tuple(confidences),
                held_out=row.held_out,
            )
        )
    return trials


def model_stats(trials: Iterable[Trial], ddof: int = 0) -> dict[str, tuple[float, float]]:
    """Per-model (mean of trial means, std across trial means) for cohorts."""
    by_model: dict[str, list[float]] = {}
    for trial in trials:
        if trial.detected:
            by_model.setdefault(trial.model_id, []).append(trial_mean(trial))
    return {
        model_id: (sum(v) / len(v), std(v, ddof=ddof))
        for model_id, v in by_model.items()
    }


HEATMAP_CSV_COLUMNS = ["category", "color", "fusion_rgb_percent", "mean", "quintile"]
COLOR_MEANS_CSV_COLUMNS = ["color", "mean", "percent", "n_trials"]
DELTA_CSV_COLUMNS = ["category", "model_a", "model_b", "absolute", "relative_pct"]


def evaluate_logs(
    logs_dir: str | Path,
    manifest_path: str | Path,
    registry: Registry,
    out_dir: str | Path,
    ddof: int = 0,
) -> dict:
    """Run the full statistics suite over trial logs and write every export.

    Writes rankings.csv, heatmap.csv, color_means.csv, deltas.csv, and
    summary.json into ``out_dir``; returns the summary object.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials = load_trials(logs_dir, manifest_path)
    levels_by_model = {rec.model_id: rec.fusion_level.rgb_percent for rec in registry}

    stats = model_stats(trials, ddof=ddof)
    cohorts: dict[IlluminationCategory, CohortStats] = {}
    rankings: dict[IlluminationCategory, list[tuple[str, float]]] = {}
    for category in IlluminationCategory:
        cohort = build_cohort(registry, stats, category)
        if len(cohort) >= 2:
            cohorts[category] = cohort
            rankings[category] = rank(cohort)
    write_rankings_csv(rankings, cohorts, out_dir / "rankings.csv")

    rows = heatmap_rows(trials, levels_by_model)
    with open(out_dir / "heatmap.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEATMAP_CSV_COLUMNS)
        for r in rows:
            writer.writerow([r.category.value, r.color, r.rgb_percent, repr(r.mean), f"Q{r.quintile}"])

    colors = aggregate_by_color(trials)
    with open(out_dir / "color_means.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLOR_MEANS_CSV_COLUMNS)
        for c in colors:
            writer.writerow([c.color, repr(c.mean), f"{c.percent:.2f}", c.n_trials])

    # Deltas of the top-ranked model against each runner-up, per category.
    delta_rows = []
    for category, ranked in rankings.items():
        if len(ranked) < 2:
            continue
        top_id = ranked[0][0]
        top_mean = cohorts[category].member(top_id).mean
        for other_id, _ in ranked[1:3]:
            other_mean = cohorts[category].member(other_id).mean
            d = delta_report(top_mean, other_mean)
            delta_rows.append(
                [
                    category.value,
                    top_id,
                    other_id,
                    repr(d.absolute),
                    "" if d.relative_pct is None else repr(d.relative_pct),
                ]
            )
    with open(out_dir / "deltas.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DELTA_CSV_COLUMNS)
        writer.writerows(delta_rows)

    cells = aggregate_by_fusion_category(trials, levels_by_model, ddof=ddof)
    summary = {
        "n_trials": len(trials),
        "n_detected_trials": sum(1 for t in trials if t.detected),
        "rankings": {
            cat.value: [{"model_id": mid, "composite": score} for mid, score in ranked]
            for cat, ranked in rankings.items()
        },
        "top_models": {
            cat.value: ranked[0][0] for cat, ranked in rankings.items() if ranked
        },
        "color_means_percent": {c.color: c.percent for c in colors},
        "cells": [
            {
                "category": cell.category.value,
                "fusion_rgb_percent": cell.rgb_percent,
                "mean": cell.mean,
                "std": cell.std,
                "sem": cell.sem,
                "n_trials": cell.n_trials,
                "n_total": cell.n_total,
            }
            for cell in sorted(cells.values(), key=lambda c: (c.category.value, c.rgb_percent))
        ],
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
