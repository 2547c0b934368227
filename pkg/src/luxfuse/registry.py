"""Model registry, composite scoring, and per-category ranking.

The registry catalogs one fine-tuned detector per (fusion level, illumination
category) cell, 33 in total, plus generic pretrained baselines that are kept
out of ranking cohorts.  A model's composite score combines its min-max
normalized mean confidence with its normalized variability:

    score = (mean - mean_min) / (mean_max - mean_min)
          - (std - std_min) / (std_max - std_min)

where the extrema are taken over the cohort (the fine-tuned models of one
illumination category).  A term whose cohort range is zero contributes 0.
Scores live in [-1, 1]: exactly 1 for a model with the best mean and the
lowest variability, exactly -1 for the reverse.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .fusion import FUSION_GRID, FusionLevel
from .illumination import IlluminationCategory

BASELINE_CATEGORY = "baseline-any"

# Shared training metadata recorded for every fine-tuned detector.
DEFAULT_TRAINING_META: dict[str, object] = {
    "optimizer": "AdamW",
    "learning_rate": 0.002,
    "momentum": 0.9,
    "weight_decay": 0.0005,
    "image_size": 960,
    "batch_size": 16,
    "max_epochs": 30,
    "early_stop_epochs": 5,
}


class RegistryError(ValueError):
    """Raised for malformed or incomplete registries."""


class CohortMembershipError(KeyError):
    """Raised when a model is scored against a cohort it does not belong to."""


class SelectionError(LookupError):
    """Raised when no ranking exists for a requested category."""


@dataclass(frozen=True)
class ModelRecord:
    """A registered detector: fusion level x category, plus training metadata.

    ``category`` is None for the pretrained baselines, which apply to any
    illumination condition but never join ranking cohorts.
    """

    model_id: str
    fusion_level: FusionLevel
    category: IlluminationCategory | None
    weights_uri: str = ""
    training_meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def is_baseline(self) -> bool:
        return self.category is None


def fine_tuned_model_id(rgb_percent: int, category: IlluminationCategory) -> str:
    return f"f{rgb_percent:03d}_{category.value}"


def default_registry() -> "Registry":
    """The full 33-model grid plus the two COCO-pretrained baselines."""
    records = [
        ModelRecord(
            model_id=fine_tuned_model_id(p, cat),
            fusion_level=FusionLevel(p),
            category=cat,
            weights_uri=f"weights/{fine_tuned_model_id(p, cat)}.pt",
            training_meta=dict(DEFAULT_TRAINING_META),
        )
        for cat in IlluminationCategory
        for p in FUSION_GRID
    ]
    for baseline in ("yolov5n_coco", "yolov11n_coco"):
        records.append(
            ModelRecord(
                model_id=baseline,
                fusion_level=FusionLevel(100),
                category=None,
                weights_uri=f"weights/{baseline}.pt",
                training_meta={"pretrained_on": "COCO"},
            )
        )
    return Registry(records)


class Registry:
    """Immutable collection of model records with uniqueness guarantees."""

    def __init__(self, records: Iterable[ModelRecord]):
        self._records: tuple[ModelRecord, ...] = tuple(records)
        self._by_id: dict[str, ModelRecord] = {}
        seen_cells: set[tuple[int, IlluminationCategory]] = set()
        for rec in self._records:
            if rec.model_id in self._by_id:
                raise RegistryError(f"duplicate model_id {rec.model_id!r}")
            self._by_id[rec.model_id] = rec
            if rec.category is not None:
                cell = (rec.fusion_level.rgb_percent, rec.category)
                if cell in seen_cells:
                    raise RegistryError(
                        f"duplicate fine-tuned cell {rec.fusion_level}/{rec.category.value}"
                    )
                seen_cells.add(cell)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def get(self, model_id: str) -> ModelRecord:
        try:
            return self._by_id[model_id]
        except KeyError:
            raise RegistryError(f"model_id {model_id!r} not in registry") from None

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._by_id

    def fine_tuned(self, category: IlluminationCategory | None = None) -> list[ModelRecord]:
        recs = [r for r in self._records if not r.is_baseline]
        if category is not None:
            recs = [r for r in recs if r.category is category]
        return recs

    def baselines(self) -> list[ModelRecord]:
        return [r for r in self._records if r.is_baseline]

    def validate_complete(self) -> None:
        """Require the full 11-level x 3-category fine-tuned grid."""
        cells = {(r.fusion_level.rgb_percent, r.category) for r in self.fine_tuned()}
        expected = {(p, c) for p in FUSION_GRID for c in IlluminationCategory}
        if cells != expected:
            missing = sorted(
                f"{p}/{100 - p} {c.value}" for (p, c) in expected - cells
            )
            raise RegistryError(f"registry is missing fine-tuned cells: {missing}")


def load_registry(path: str | Path) -> Registry:
    """Load a registry from its JSON list-of-records file."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise RegistryError(f"{path}: expected a JSON list of model records")
    records = []
    for entry in raw:
        category = (
            None
            if entry["category"] == BASELINE_CATEGORY
            else IlluminationCategory.from_value(entry["category"])
        )
        records.append(
            ModelRecord(
                model_id=entry["model_id"],
                fusion_level=FusionLevel(int(entry["fusion_rgb_percent"])),
                category=category,
                weights_uri=entry.get("weights_uri", ""),
                training_meta=entry.get("training_meta", {}),
            )
        )
    return Registry(records)


def save_registry(registry: Registry, path: str | Path) -> None:
    raw = [
        {
            "model_id": rec.model_id,
            "fusion_rgb_percent": rec.fusion_level.rgb_percent,
            "category": BASELINE_CATEGORY if rec.category is None else rec.category.value,
            "weights_uri": rec.weights_uri,
            "training_meta": dict(rec.training_meta),
        }
        for rec in registry
    ]
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class CohortMember:
    """Measured statistics for one model within a ranking cohort."""

    model_id: str
    rgb_percent: int
    mean: float
    std: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean confidence must be in [0, 1], got {self.mean}")
        if self.std < 0.0:
            raise ValueError(f"std must be non-negative, got {self.std}")


class CohortStats:
    """A cohort of cohort members; extrema are recomputed from the members."""

    def __init__(self, members: Iterable[CohortMember]):
        self.members: tuple[CohortMember, ...] = tuple(members)
        ids = [m.model_id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError("cohort members must have unique model_ids")
        self._by_id = {m.model_id: m for m in self.members}

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._by_id

    def member(self, model_id: str) -> CohortMember:
        try:
            return self._by_id[model_id]
        except KeyError:
            raise CohortMembershipError(f"model {model_id!r} is not in the cohort") from None

    @property
    def mean_min(self) -> float:
        return min(m.mean for m in self.members)

    @property
    def mean_max(self) -> float:
        return max(m.mean for m in self.members)

    @property
    def std_min(self) -> float:
        return min(m.std for m in self.members)

    @property
    def std_max(self) -> float:
        return max(m.std for m in self.members)


def composite_score(model_id: str, cohort: CohortStats) -> float:
    """Normalized-mean minus normalized-std score of a cohort member."""
    if len(cohort) < 2:
        raise ValueError("composite score needs a cohort of at least 2 members")
    member = cohort.member(model_id)
    mean_range = cohort.mean_max - cohort.mean_min
    std_range = cohort.std_max - cohort.std_min
    mean_term = 0.0 if mean_range == 0.0 else (member.mean - cohort.mean_min) / mean_range
    std_term = 0.0 if std_range == 0.0 else (member.std - cohort.std_min) / std_range
    return mean_term - std_term


def rank(cohort: CohortStats) -> list[tuple[str, float]]:
    """Order a cohort by descending composite score.

    Ties break toward the higher mean, then the higher RGB percentage, then
    the lexically smaller model_id.
    """
    if len(cohort) == 0:
        raise ValueError("cannot rank an empty cohort")
    scored = [(m, composite_score(m.model_id, cohort)) for m in cohort.members]
    scored.sort(key=lambda pair: (-pair[1], -pair[0].mean, -pair[0].rgb_percent, pair[0].model_id))
    return [(m.model_id, score) for m, score in scored]


def build_cohort(
    registry: Registry,
    stats_by_model: Mapping[str, tuple[float, float]],
    category: IlluminationCategory,
) -> CohortStats:
    """Assemble the fine-tuned cohort of one category from measured stats.

    Baselines are excluded by construction; fine-tuned models without
    measured statistics are skipped.
    """
    members = []
    for rec in registry.fine_tuned(category):
        if rec.model_id in stats_by_model:
            mean, std = stats_by_model[rec.model_id]
            members.append(
                CohortMember(rec.model_id, rec.fusion_level.rgb_percent, mean, std)
            )
    return CohortStats(members)


def select_active(
    category: IlluminationCategory,
    registry: Registry,
    rankings: Mapping[IlluminationCategory, list[tuple[str, float]]],
) -> ModelRecord:
    """Resolve the rank-1 model for a category from precomputed rankings."""
    if category not in rankings or not rankings[category]:
        raise SelectionError(f"no ranking available for category {category.value}")
    top_id, _ = rankings[category][0]
    return registry.get(top_id)


RANKING_CSV_COLUMNS = ["category", "rank", "model_id", "fusion_rgb_percent", "mean", "std", "composite"]


def write_rankings_csv(
    rankings: Mapping[IlluminationCategory, list[tuple[str, float]]],
    cohorts: Mapping[IlluminationCategory, CohortStats],
    path: str | Path,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RANKING_CSV_COLUMNS)
        for category in IlluminationCategory:
            if category not in rankings:
                continue
            cohort = cohorts[category]
            for position, (model_id, score) in enumerate(rankings[category], start=1):
                member = cohort.member(model_id)
                writer.writerow(
                    [
                        category.value,
                        position,
                        model_id,
                        member.rgb_percent,
                        repr(member.mean),
                        repr(member.std),
                        repr(score),
                    ]
                )


def read_model_stats_csv(path: str | Path) -> list[dict]:
    """Read a model statistics CSV: model_id,fusion_rgb_percent,category,mean,std."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"model_id", "fusion_rgb_percent", "category", "mean", "std"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}")
        for row in reader:
            rows.append(
                {
                    "model_id": row["model_id"],
                    "rgb_percent": int(row["fusion_rgb_percent"]),
                    "category": IlluminationCategory.from_value(row["category"]),
                    "mean": float(row["mean"]),
                    "std": float(row["std"]),
                }
            )
    return rows
