import base64
import io
import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from detector_service.app import build_app
from detector_service.config import ServiceConfig

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def client():
    return TestClient(build_app(ServiceConfig()))


def png_b64(pixels: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def detect_request(pixels: np.ndarray, model_id="stub", frame_id="f0", lux=500.0) -> dict:
    return {
        "frame_id": frame_id,
        "model_id": model_id,
        "lux": lux,
        "width": int(pixels.shape[1]),
        "height": int(pixels.shape[0]),
        "image_b64": png_b64(pixels),
    }


def load_golden(name: str) -> dict:
    return json.loads((GOLDEN / name).read_text())
