"""Single entry-point tool: every pipeline capability behind one command.

Exit codes: 0 on success, 1 for validation problems (bad flags, missing or
malformed inputs), 2 for runtime failures.  Machine-readable output goes to
files; stdout carries human summaries only.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import client as client_mod
from . import evaluation, fixtures, registry as registry_mod
from .config import load_config
from .dataset import read_sample_manifest, split, write_sample_manifest
from .detection import MockDetector
from .frames import Modality, read_frame, write_frame
from .fusion import ALL_LEVELS, FusionLevel, blend
from .illumination import IlluminationCategory, SwitchState, load_lux_trace, step
from .pipeline import PipelineConfig, ReplaySource, run_trial
from .registration import register


class ValidationError(Exception):
    """User input problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract here is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="luxfuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI config file")

    p = sub.add_parser("fuse", parents=[common], help="batch-fuse paired rgb/lwir directories")
    p.add_argument("--rgb", type=Path, required=True)
    p.add_argument("--lwir", type=Path, required=True)
    p.add_argument("--levels", default="all", help='"all" or comma list of rgb percents')
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("split", parents=[common], help="deterministic train/val split")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--group-by-recording", action="store_true",
                   help="split whole recordings to prevent temporal leakage")
    p.add_argument("--stratify-by-color", action="store_true",
                   help="hold the ratio within each color label")

    p = sub.add_parser("categorize", parents=[common], help="categorize a lux trace")
    p.add_argument("--lux-trace", type=Path, required=True)
    p.add_argument("--margin", type=float, default=None, help="hysteresis margin in lux")

    p = sub.add_parser("evaluate", parents=[common], help="full statistics suite over trial logs")
    p.add_argument("--logs", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--registry", type=Path, default=None)

    p = sub.add_parser("rank", parents=[common], help="composite ranking from a stats CSV")
    p.add_argument("--stats", type=Path, required=True)
    p.add_argument("--category", required=True, choices=[c.value for c in IlluminationCategory])
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("run", parents=[common], help="run a pipeline trial over a replay source")
    p.add_argument("--source", type=Path, required=True)
    p.add_argument("--recording", default=None, help="restrict to one recording id")
    p.add_argument("--backend", choices=["mock", "remote"], default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--registry", type=Path, default=None)
    p.add_argument("--mock-table", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("protocol-check", parents=[common], help="probe a live detector service")
    p.add_argument("--endpoint", required=True)

    p = sub.add_parser("gen-fixtures", parents=[common], help="write synthetic fixtures")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--frames", type=int, default=30)

    return parser


def _require(path: Path, kind: str) -> Path:
    if not path.exists():
        raise ValidationError(f"{kind} not found: {path}")
    return path


def _cmd_fuse(args, cfg) -> int:
    _require(args.rgb, "rgb directory")
    _require(args.lwir, "lwir directory")
    if args.levels == "all":
        levels = list(ALL_LEVELS)
    else:
        try:
            levels = [FusionLevel(int(v)) for v in args.levels.split(",")]
        except ValueError as exc:
            raise ValidationError(f"bad --levels {args.levels!r}: {exc}")
    rgb_files = {p.stem: p for p in sorted(args.rgb.glob("*.png"))}
    lwir_files = {p.stem: p for p in sorted(args.lwir.glob("*.png"))}
    stems = sorted(rgb_files.keys() & lwir_files.keys())
    if not stems:
        raise ValidationError(f"no paired .png stems between {args.rgb} and {args.lwir}")
    args.out.mkdir(parents=True, exist_ok=True)

    def fuse_pair(stem: str) -> int:
        rgb = read_frame(rgb_files[stem], Modality.RGB)
        lwir = read_frame(lwir_files[stem], Modality.LWIR)
        registered = register(lwir, cfg.homography, rgb.width, rgb.height)
        for level in levels:
            fused = blend(rgb, registered, level)
            write_frame(fused, args.out / f"{stem}_f{level.rgb_percent}.png")
        return len(levels)

    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            written = sum(pool.map(fuse_pair, stems))
    else:
        written = sum(fuse_pair(stem) for stem in stems)
    unpaired = sorted((rgb_files.keys() | lwir_files.keys()) - set(stems))
    print(f"fused {len(stems)} pairs x {len(levels)} levels -> {written} images in {args.out}")
    if unpaired:
        print(f"skipped {len(unpaired)} unpaired stems: {', '.join(unpaired[:5])}")
    return 0


def _cmd_split(args, cfg) -> int:
    _require(args.manifest, "manifest")
    fraction = cfg.split_fraction if args.fraction is None else args.fraction
    seed = cfg.split_seed if args.seed is None else args.seed
    try:
        samples = read_sample_manifest(args.manifest)
        train, val = split(
            samples, fraction, seed,
            group_by_recording=args.group_by_recording,
            stratify_by_color=args.stratify_by_color,
        )
    except ValueError as exc:
        raise ValidationError(str(exc))
    out_dir = args.out_dir or args.manifest.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.manifest.stem
    write_sample_manifest(train, out_dir / f"{stem}_train.csv")
    write_sample_manifest(val, out_dir / f"{stem}_val.csv")
    print(f"split {len(samples)} samples -> {len(train)} train / {len(val)} val (seed {seed})")
    return 0


def _cmd_categorize(args, cfg) -> int:
    _require(args.lux_trace, "lux trace")
    margin = cfg.hysteresis_margin if args.margin is None else args.margin
    try:
        readings = load_lux_trace(args.lux_trace)
    except ValueError as exc:
        raise ValidationError(str(exc))
    state = SwitchState(hysteresis_margin=margin)
    events = []
    for reading in readings:
        state, event = step(state, reading)
        print(f"{reading.timestamp_ms}\t{reading.lux}\t{state.current.value}")
        if event is not None:
            events.append(event)
    for event in events:
        old = "-" if event.old is None else event.old.value
        print(f"switch@{event.timestamp_ms}ms: {old} -> {event.new.value}")
    n_post_init = sum(1 for e in events if e.old is not None)
    print(f"{len(readings)} readings, {n_post_init} switches")
    return 0


def _cmd_evaluate(args, cfg) -> int:
    _require(args.logs, "logs directory")
    _require(args.manifest, "trial manifest")
    registry_path = args.registry or Path(cfg.registry_path)
    _require(registry_path, "registry")
    registry = registry_mod.load_registry(registry_path)
    try:
        summary = evaluation.evaluate_logs(
            args.logs, args.manifest, registry, args.out, ddof=cfg.std_ddof
        )
    except (ValueError, FileNotFoundError) as exc:
        raise ValidationError(str(exc))
    for category, model_id in sorted(summary["top_models"].items()):
        print(f"top {category}: {model_id}")
    print(f"wrote rankings/heatmap/color/delta CSVs and summary.json to {args.out}")
    return 0


def _cmd_rank(args, cfg) -> int:
    _require(args.stats, "stats CSV")
    category = IlluminationCategory.from_value(args.category)
    try:
        rows = registry_mod.read_model_stats_csv(args.stats)
    except ValueError as exc:
        raise ValidationError(str(exc))
    members = [
        registry_mod.CohortMember(r["model_id"], r["rgb_percent"], r["mean"], r["std"])
        for r in rows
        if r["category"] is category
    ]
    if not members:
        raise ValidationError(f"no rows for category {category.value} in {args.stats}")
    cohort = registry_mod.CohortStats(members)
    ranked = registry_mod.rank(cohort)
    print("rank\tmodel_id\tmean\tstd\tcomposite")
    for position, (model_id, score) in enumerate(ranked, start=1):
        member = cohort.member(model_id)
        print(f"{position}\t{model_id}\t{member.mean:.4f}\t{member.std:.4f}\t{score:.4f}")
    if args.out:
        registry_mod.write_rankings_csv({category: ranked}, {category: cohort}, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_run(args, cfg) -> int:
    _require(args.source, "replay source")
    backend_kind = args.backend or cfg.backend
    registry_path = args.registry or Path(cfg.registry_path)
    _require(registry_path, "registry")
    registry = registry_mod.load_registry(registry_path)

    try:
        source = ReplaySource(args.source, recording_id=args.recording)
    except ValueError as exc:
        raise ValidationError(str(exc))

    if backend_kind == "mock":
        table_path = args.mock_table or Path(cfg.mock_table_path)
        _require(table_path, "mock confidence table")
        backend = MockDetector.from_registry(
            registry, fixtures.load_mock_table(table_path), source.ground_truth
        )
    else:
        endpoint = args.endpoint or cfg.endpoint
        backend = client_mod.RemoteDetector(endpoint, timeout_ms=cfg.timeout_ms)

    pipeline_cfg = PipelineConfig(
        registry=registry,
        backend=backend,
        active_models=dict(cfg.active_models),
        homography=cfg.homography,
        spurious=cfg.spurious,
        targeting=cfg.targeting,
        trial_duration_s=cfg.trial_duration_s,
        hysteresis_margin=cfg.hysteresis_margin,
    )
    log = run_trial(source, pipeline_cfg)

    args.out.mkdir(parents=True, exist_ok=True)
    log.write_detection_csv(args.out / "detections.csv")
    log.write_command_csv(args.out / "commands.csv")
    log.write_events_ndjson(args.out / "events.ndjson")
    confidences = log.retained_confidences()
    mean = sum(confidences) / len(confidences) if confidences else float("nan")
    print(
        f"processed {len(log.detection_rows)} frames, "
        f"{len(log.switches)} switches, {len(log.commands)} commands"
    )
    print(f"models used: {', '.join(log.models_used)}")
    print(f"retained detections: {len(confidences)}, mean confidence {mean:.4f}")
    print(f"logs written to {args.out}")
    return 0


def _cmd_protocol_check(args, cfg) -> int:
    violations = client_mod.protocol_check(args.endpoint, timeout_ms=cfg.timeout_ms)
    if violations:
        for v in violations:
            print(f"VIOLATION: {v}")
        print(f"{len(violations)} protocol violations against {args.endpoint}")
        return 2
    print(f"protocol check passed: {args.endpoint} conforms (0 violations)")
    return 0


def _cmd_gen_fixtures(args, cfg) -> int:
    paths = fixtures.generate_fixtures(args.out, n_frames=args.frames)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


_COMMANDS = {
    "fuse": _cmd_fuse,
    "split": _cmd_split,
    "categorize": _cmd_categorize,
    "evaluate": _cmd_evaluate,
    "rank": _cmd_rank,
    "run": _cmd_run,
    "protocol-check": _cmd_protocol_check,
    "gen-fixtures": _cmd_gen_fixtures,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        cfg = load_config(args.config)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    try:
        return _COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        return _fail(str(exc))
    except Exception as exc:  # runtime failure contract
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
