"""Service configuration: INI file plus environment overrides.

Model map entries are either ``builtin:<name>`` (shipped adapters, currently
just the stub) or a filesystem path to a weights file; every mapped path must
exist when the config loads, so misconfiguration fails at startup rather than
on the first request.

Environment overrides: ``DETECTOR_SERVICE_HOST`` and ``DETECTOR_SERVICE_PORT``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

HOST_ENV = "DETECTOR_SERVICE_HOST"
PORT_ENV = "DETECTOR_SERVICE_PORT"

DEFAULT_MODELS = {"stub": "builtin:stub"}


class ConfigError(ValueError):
    """Raised when the service configuration is unusable."""


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8081
    device: str = "cpu"
    max_image_side: int = 960
    models: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_MODELS))

    def validate(self) -> None:
        if not self.models:
            raise ConfigError("model map is empty; the service would serve nothing")
        if self.max_image_side < 1:
            raise ConfigError(f"max_image_side must be positive, got {self.max_image_side}")
        for model_id, uri in self.models.items():
            if uri.startswith("builtin:"):
                continue
            if not Path(uri).exists():
                raise ConfigError(f"weights file for model {model_id!r} not found: {uri}")


def load_config(path: str | Path | None = None) -> ServiceConfig:
    cfg = ServiceConfig()
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if not parser.read(path):
            raise ConfigError(f"config file not found: {path}")
        if parser.has_section("service"):
            sec = parser["service"]
            cfg.host = sec.get("host", cfg.host)
            cfg.port = sec.getint("port", cfg.port)
            cfg.device = sec.get("device", cfg.device)
            cfg.max_image_side = sec.getint("max_image_side", cfg.max_image_side)
        if parser.has_section("models"):
            cfg.models = dict(parser["models"])
    if os.environ.get(HOST_ENV):
        cfg.host = os.environ[HOST_ENV]
    if os.environ.get(PORT_ENV):
        try:
            cfg.port = int(os.environ[PORT_ENV])
        except ValueError:
            raise ConfigError(f"{PORT_ENV} must be an integer, got {os.environ[PORT_ENV]!r}")
    cfg.validate()
    return cfg
