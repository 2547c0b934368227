"""Client-side wire protocol for the remote detection service.

Request (POST /v1/detect), one JSON object:

    {"frame_id": str, "model_id": str, "lux": number,
     "width": int, "height": int, "image_b64": base64 PNG of the frame}

Response 200:

    {"frame_id": str, "model_id": str, "inference_ms": number,
     "detections": [{"class_id": int, "confidence": number,
                     "bbox": [cx, cy, w, h]}]}

Errors: 404 {"error": "unknown_model", "model_id": ...} and
400 {"error": "bad_request", "detail": ...}.  GET /v1/models returns a JSON
array of model ids; GET /v1/health returns {"status": "ok"}.  Confidence and
bbox values are serialized at full double precision (well past six
significant digits), so encode/parse round-trips are lossless.
"""

from __future__ import annotations

import base64
import io
import json
from typing import Any

import numpy as np
from PIL import Image

from .detection import Detection, DetectionResult
from .frames import Frame, Modality

DETECT_PATH = "/v1/detect"
MODELS_PATH = "/v1/models"
HEALTH_PATH = "/v1/health"


class DetectorError(Exception):
    """Base class for remote-detection failures."""


class MalformedResponseError(DetectorError):
    """The server's reply violates the response schema."""


def encode_frame_b64(frame: Frame) -> str:
    buf = io.BytesIO()
    Image.fromarray(frame.pixels, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_frame_b64(image_b64: str) -> np.ndarray:
    raw = base64.b64decode(image_b64.encode("ascii"), validate=True)
    with Image.open(io.BytesIO(raw)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def build_detect_request(
    frame: Frame, model_id: str, frame_id: str, lux: float = 0.0
) -> dict[str, Any]:
    return {
        "frame_id": frame_id,
        "model_id": model_id,
        "lux": lux,
        "width": frame.width,
        "height": frame.height,
        "image_b64": encode_frame_b64(frame),
    }


def request_to_json(request: dict[str, Any]) -> str:
    return json.dumps(request, sort_keys=True)


def parse_detect_request(payload: str | dict[str, Any]) -> tuple[dict[str, Any], Frame]:
    """Decode and validate a request; returns (fields, decoded frame).

    Used by golden-file tests to prove the request encoding round-trips.
    """
    obj = json.loads(payload) if isinstance(payload, str) else payload
    for key, kind in (
        ("frame_id", str),
        ("model_id", str),
        ("lux", (int, float)),
        ("width", int),
        ("height", int),
        ("image_b64", str),
    ):
        if key not in obj:
            raise ValueError(f"request missing field {key!r}")
        if not isinstance(obj[key], kind) or isinstance(obj[key], bool):
            raise ValueError(f"request field {key!r} has wrong type")
    pixels = decode_frame_b64(obj["image_b64"])
    if pixels.shape[0] != obj["height"] or pixels.shape[1] != obj["width"]:
        raise ValueError(
            f"request dims {obj['width']}x{obj['height']} do not match "
            f"decoded image {pixels.shape[1]}x{pixels.shape[0]}"
        )
    return obj, Frame(pixels, Modality.FUSED)


def parse_detect_response(payload: str | bytes | dict[str, Any]) -> DetectionResult:
    """Validate a 200 response body and build the DetectionResult."""
    if isinstance(payload, (str, bytes)):
        try:
            obj = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise MalformedResponseError(f"response is not valid JSON: {exc}") from exc
    else:
        obj = payload
    if not isinstance(obj, dict):
        raise MalformedResponseError(f"response must be a JSON object, got {type(obj).__name__}")

    for key, kind in (("frame_id", str), ("model_id", str), ("inference_ms", (int, float))):
        if key not in obj:
            raise MalformedResponseError(f"response missing field {key!r}")
        if not isinstance(obj[key], kind) or isinstance(obj[key], bool):
            raise MalformedResponseError(f"response field {key!r} has wrong type")
    if obj["inference_ms"] < 0:
        raise MalformedResponseError(f"inference_ms must be non-negative, got {obj['inference_ms']}")
    if "detections" not in obj or not isinstance(obj["detections"], list):
        raise MalformedResponseError("response missing detections list")

    detections = []
    for i, det in enumerate(obj["detections"]):
        if not isinstance(det, dict):
            raise MalformedResponseError(f"detection {i} is not an object")
        if not isinstance(det.get("class_id"), int) or isinstance(det.get("class_id"), bool):
            raise MalformedResponseError(f"detection {i} has invalid class_id")
        conf = det.get("confidence")
        if not isinstance(conf, (int, float)) or isinstance(conf, bool):
            raise MalformedResponseError(f"detection {i} has non-numeric confidence")
        bbox = det.get("bbox")
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in bbox)
        ):
            raise MalformedResponseError(f"detection {i} has invalid bbox")
        try:
            detections.append(Detection(det["class_id"], float(conf), tuple(float(v) for v in bbox)))
        except ValueError as exc:
            raise MalformedResponseError(f"detection {i}: {exc}") from exc

    return DetectionResult(
        frame_id=obj["frame_id"],
        model_id=obj["model_id"],
        detections=tuple(detections),
        inference_ms=float(obj["inference_ms"]),
    )


def response_to_json(result: DetectionResult) -> str:
    """Serialize a DetectionResult into the wire response shape."""
    obj = {
        "frame_id": result.frame_id,
        "model_id": result.model_id,
        "inference_ms": result.inference_ms,
        "detections": [
            {
                "class_id": d.class_id,
                "confidence": d.confidence,
                "bbox": list(d.bbox),
            }
            for d in result.detections
        ],
    }
    return json.dumps(obj, sort_keys=True)
