"""INI config file: sectioned key-value defaults for every tool knob.

Flags always override the file; the file overrides the built-in defaults
below.  The homography is nine row-major decimal numbers on one line.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .detection import SpuriousPolicy
from .illumination import IlluminationCategory
from .pipeline import DEFAULT_ACTIVE_MODELS
from .registration import Homography
from .turret import TargetingConfig


@dataclass
class AppConfig:
    registry_path: str = "registry.json"
    homography: Homography = field(default_factory=Homography.identity)
    active_models: dict[IlluminationCategory, str] = field(
        default_factory=lambda: dict(DEFAULT_ACTIVE_MODELS)
    )
    backend: str = "mock"
    endpoint: str = "http://127.0.0.1:8081"
    timeout_ms: float = 2000.0
    mock_table_path: str = "mock_table.json"
    spurious: SpuriousPolicy = field(default_factory=SpuriousPolicy)
    targeting: TargetingConfig = field(default_factory=TargetingConfig)
    trial_duration_s: float = 10.0
    hysteresis_margin: float = 0.0
    lux_poll_hz: float = 0.0  # 0 = sample lux with every frame
    std_ddof: int = 0  # 0 = population convention, 1 = sample
    split_fraction: float = 0.75
    split_seed: int = 0


def parse_homography_text(text: str) -> Homography:
    return Homography.from_flat(text.replace(",", " ").split())


def load_config(path: str | Path | None) -> AppConfig:
    """Load an AppConfig, applying file values over the built-in defaults."""
    cfg = AppConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    if parser.has_section("paths"):
        sec = parser["paths"]
        cfg.registry_path = sec.get("registry", cfg.registry_path)
        cfg.mock_table_path = sec.get("mock_table", cfg.mock_table_path)
    if parser.has_option("registration", "homography"):
        cfg.homography = parse_homography_text(parser["registration"]["homography"])
    if parser.has_section("models"):
        for category in IlluminationCategory:
            if parser.has_option("models", category.value):
                cfg.active_models[category] = parser["models"][category.value]
    if parser.has_section("detector"):
        sec = parser["detector"]
        cfg.backend = sec.get("backend", cfg.backend)
        cfg.endpoint = sec.get("endpoint", cfg.endpoint)
        cfg.timeout_ms = sec.getfloat("timeout_ms", cfg.timeout_ms)
    if parser.has_section("spurious"):
        sec = parser["spurious"]
        cfg.spurious = SpuriousPolicy(
            confidence_floor=sec.getfloat("confidence_floor", cfg.spurious.confidence_floor),
            max_jump=sec.getfloat("max_jump", cfg.spurious.max_jump),
            iou_floor=sec.getfloat("iou_floor", cfg.spurious.iou_floor),
        )
    if parser.has_section("targeting"):
        sec = parser["targeting"]
        cfg.targeting = TargetingConfig(
            hfov_deg=sec.getfloat("hfov_deg", cfg.targeting.hfov_deg),
            vfov_deg=sec.getfloat("vfov_deg", cfg.targeting.vfov_deg),
            steps_per_rev=sec.getint("steps_per_rev", cfg.targeting.steps_per_rev),
            deadband_px=sec.getint("deadband_px", cfg.targeting.deadband_px),
            gain=sec.getfloat("gain", cfg.targeting.gain),
            max_steps_per_cycle=sec.getint("max_steps_per_cycle", cfg.targeting.max_steps_per_cycle),
        )
    if parser.has_section("pipeline"):
        sec = parser["pipeline"]
        cfg.trial_duration_s = sec.getfloat("trial_duration_s", cfg.trial_duration_s)
    if parser.has_section("illumination"):
        sec = parser["illumination"]
        cfg.hysteresis_margin = sec.getfloat("hysteresis_margin", cfg.hysteresis_margin)
        cfg.lux_poll_hz = sec.getfloat("lux_poll_hz", cfg.lux_poll_hz)
    if parser.has_section("evaluation"):
        convention = parser["evaluation"].get("std_convention", "population")
        if convention not in ("population", "sample"):
            raise ValueError(f"std_convention must be population or sample, got {convention!r}")
        cfg.std_ddof = 0 if convention == "population" else 1
    if parser.has_section("dataset"):
        sec = parser["dataset"]
        cfg.split_fraction = sec.getfloat("split_fraction", cfg.split_fraction)
        cfg.split_seed = sec.getint("split_seed", cfg.split_seed)
    return cfg


def write_config(cfg: AppConfig, path: str | Path) -> None:
    """Write a fully-populated config file (used by the fixture generator)."""
    h = " ".join(repr(v) for v in cfg.homography.matrix.reshape(-1))
    models = "\n".join(f"{c.value} = {m}" for c, m in cfg.active_models.items())
    text = f"""[paths]
registry = {cfg.registry_path}
mock_table = {cfg.mock_table_path}

[registration]
# nine row-major homography coefficients (target pixel -> LWIR pixel)
homography = {h}

[models]
{models}

[detector]
backend = {cfg.backend}
endpoint = {cfg.endpoint}
timeout_ms = {cfg.timeout_ms}

[spurious]
# engineering placeholders; tune per deployment
confidence_floor = {cfg.spurious.confidence_floor}
max_jump = {cfg.spurious.max_jump}
iou_floor = {cfg.spurious.iou_floor}

[targeting]
hfov_deg = {cfg.targeting.hfov_deg}
vfov_deg = {cfg.targeting.vfov_deg}
steps_per_rev = {cfg.targeting.steps_per_rev}
deadband_px = {cfg.targeting.deadband_px}
gain = {cfg.targeting.gain}
max_steps_per_cycle = {cfg.targeting.max_steps_per_cycle}

[pipeline]
trial_duration_s = {cfg.trial_duration_s}

[illumination]
hysteresis_margin = {cfg.hysteresis_margin}
lux_poll_hz = {cfg.lux_poll_hz}

[evaluation]
std_convention = {"population" if cfg.std_ddof == 0 else "sample"}

[dataset]
split_fraction = {cfg.split_fraction}
split_seed = {cfg.split_seed}
"""
    Path(path).write_text(text)
