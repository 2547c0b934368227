#!/usr/bin/env python3
"""End-to-end mock experiment: synthetic trials over the whole model grid.

For every illumination category, every fusion level, and every requested mug
color, replays one tracking trial against the mock backend with that model
active, then runs the evaluation suite: rankings, heatmap, color means,
deltas, and a summary document.

Usage:
    python3 scripts/run_mock_experiment.py --out /tmp/mock_experiment
"""

import argparse
import json
import sys
from pathlib import Path

from luxfuse.detection import MockDetector
from luxfuse.evaluation import TrialManifestRow, evaluate_logs, write_trial_manifest
from luxfuse.fixtures import build_mock_table, save_mock_table, write_recording
from luxfuse.fusion import FUSION_GRID
from luxfuse.illumination import IlluminationCategory
from luxfuse.pipeline import PipelineConfig, ReplaySource, run_trial
from luxfuse.registry import default_registry, fine_tuned_model_id, save_registry

CATEGORY_LUX = {
    IlluminationCategory.FULL_LIGHT: 2000.0,
    IlluminationCategory.DIM_LIGHT: 500.0,
    IlluminationCategory.NO_LIGHT: 5.0,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--frames", type=int, default=30)
    parser.add_argument("--colors", default="white,black,teal")
    parser.add_argument("--noise", type=float, default=0.01, help="mock confidence sigma")
    args = parser.parse_args()
    colors = args.colors.split(",")

    registry = default_registry()
    table = build_mock_table()
    args.out.mkdir(parents=True, exist_ok=True)
    save_registry(registry, args.out / "registry.json")
    save_mock_table(table, args.out / "mock_table.json")

    source_root = args.out / "source"
    for category in IlluminationCategory:
        for color in colors:
            write_recording(
                source_root, f"rec_{category.value}_{color}",
                [CATEGORY_LUX[category]], color, n_frames=args.frames,
            )

    logs_dir = args.out / "logs"
    logs_dir.mkdir(exist_ok=True)
    manifest_rows = []
    for category in IlluminationCategory:
        for percent in FUSION_GRID:
            model_id = fine_tuned_model_id(percent, category)
            for color in colors:
                source = ReplaySource(source_root, recording_id=f"rec_{category.value}_{color}")
                backend = MockDetector.from_registry(
                    registry, table, source.ground_truth, noise_sigma=args.noise, seed=42
                )
                active = {
                    cat: fine_tuned_model_id(percent if cat is category else 50, cat)
                    for cat in IlluminationCategory
                }
                cfg = PipelineConfig(registry=registry, backend=backend, active_models=active)
                log = run_trial(source, cfg)
                trial_id = f"{model_id}_{color}"
                log.write_detection_csv(logs_dir / f"{trial_id}.csv")
                manifest_rows.append(
                    TrialManifestRow(
                        trial_id, model_id, category, color,
                        held_out=color in ("teal", "yellow"),
                    )
                )

    manifest_path = args.out / "trials.csv"
    write_trial_manifest(manifest_rows, manifest_path)
    summary = evaluate_logs(logs_dir, manifest_path, registry, args.out / "evaluation")

    print(f"{len(manifest_rows)} trials evaluated")
    print("top models per category:")
    print(json.dumps(summary["top_models"], indent=2))
    print("color means (percent):")
    print(json.dumps(summary["color_means_percent"], indent=2))
    print(f"full outputs in {args.out / 'evaluation'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
