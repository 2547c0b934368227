"""Detector adapters: anything that maps an image array to boxes plugs in here.

The service ships only the deterministic stub (``builtin:stub``), which makes
the whole wire protocol testable without weights.  Real runtimes register a
factory for their weights files via ``register_adapter_factory``; the factory
receives the weights path and the device hint and returns an adapter.
"""

from __future__ import annotations

from typing import Callable, Protocol

import numpy as np

from .config import ConfigError, ServiceConfig


class DetectorAdapter(Protocol):
    def detect(self, image: np.ndarray) -> list[tuple[int, float, tuple[float, float, float, float]]]:
        """Map an (h, w, 3) uint8 image to (class_id, confidence, bbox) tuples."""
        ...


class StubAdapter:
    """Deterministic fake detector: one box at the brightness centroid.

    Confidence scales with mean brightness; identical images always produce
    identical detections, so clients can pin responses in golden files.
    """

    BOX_SIZE = 0.25

    def detect(self, image: np.ndarray):
        gray = image.astype(np.float64).mean(axis=2)
        h, w = gray.shape
        total = gray.sum()
        if total == 0.0:
            cx, cy = 0.5, 0.5
        else:
            ys, xs = np.mgrid[0:h, 0:w]
            cx = ((xs * gray).sum() / total + 0.5) / w
            cy = ((ys * gray).sum() / total + 0.5) / h
        confidence = 0.1 + 0.8 * float(gray.mean()) / 255.0
        return [(0, confidence, (float(cx), float(cy), self.BOX_SIZE, self.BOX_SIZE))]


AdapterFactory = Callable[[str, str], DetectorAdapter]

_BUILTINS: dict[str, Callable[[], DetectorAdapter]] = {"stub": StubAdapter}
_FACTORIES: list[AdapterFactory] = []


def register_adapter_factory(factory: AdapterFactory) -> None:
    """Install a loader for non-builtin weights URIs (first match wins)."""
    _FACTORIES.append(factory)


def resolve_adapters(cfg: ServiceConfig) -> dict[str, DetectorAdapter]:
    """Instantiate one adapter per configured model; fails fast on gaps."""
    adapters: dict[str, DetectorAdapter] = {}
    for model_id, uri in cfg.models.items():
        if uri.startswith("builtin:"):
            name = uri.split(":", 1)[1]
            if name not in _BUILTINS:
                raise ConfigError(f"model {model_id!r}: unknown builtin adapter {name!r}")
            adapters[model_id] = _BUILTINS[name]()
            continue
        adapter = None
        for factory in _FACTORIES:
            adapter = factory(uri, cfg.device)
            if adapter is not None:
                break
        if adapter is None:
            raise ConfigError(
                f"model {model_id!r}: no adapter registered for weights {uri!r}"
            )
        adapters[model_id] = adapter
    return adapters
