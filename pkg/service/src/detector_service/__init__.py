"""HTTP inference microservice for the fusion detection pipeline."""

from .app import build_app
from .config import ServiceConfig, load_config

__version__ = "0.1.0"

__all__ = ["ServiceConfig", "build_app", "load_config", "__version__"]
