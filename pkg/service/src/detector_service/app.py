"""FastAPI application implementing the detection wire protocol.

Endpoints:
    POST /v1/detect   run one model on one base64 PNG frame
    GET  /v1/models   JSON array of served model ids
    GET  /v1/health   {"status": "ok"}

Error contract: unknown model ids return 404 {"error": "unknown_model",
"model_id": ...}; anything wrong with the request body returns 400
{"error": "bad_request", "detail": ...}; adapter failures return 500
{"error": "inference_failed"}.  The protocol is stateless, so any request
may hit any worker.
"""

from __future__ import annotations

import base64
import binascii
import io
import logging
import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError

from .adapters import resolve_adapters
from .config import ServiceConfig

logger = logging.getLogger(__name__)


class BadRequest(ValueError):
    pass


def _bad_request(detail: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": "bad_request", "detail": detail})


def _validate_body(body) -> dict:
    if not isinstance(body, dict):
        raise BadRequest("request body must be a JSON object")
    for key, kind in (
        ("frame_id", str),
        ("model_id", str),
        ("lux", (int, float)),
        ("width", int),
        ("height", int),
        ("image_b64", str),
    ):
        if key not in body:
            raise BadRequest(f"missing field {key!r}")
        if not isinstance(body[key], kind) or isinstance(body[key], bool):
            raise BadRequest(f"field {key!r} has the wrong type")
    if body["width"] < 1 or body["height"] < 1:
        raise BadRequest("width and height must be positive")
    return body


def _decode_image(image_b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(image_b64.encode("ascii"), validate=True)
    except (binascii.Error, UnicodeEncodeError) as exc:
        raise BadRequest(f"image_b64 is not valid base64: {exc}") from exc
    try:
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise BadRequest("image does not decode as a raster file") from exc


def build_app(cfg: ServiceConfig) -> FastAPI:
    cfg.validate()
    adapters = resolve_adapters(cfg)
    app = FastAPI(title="detector-service", docs_url=None, redoc_url=None)

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.get("/v1/models")
    def models():
        return list(adapters.keys())

    @app.post("/v1/detect")
    async def detect(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _bad_request("body is not valid JSON")
        try:
            body = _validate_body(body)
        except BadRequest as exc:
            return _bad_request(str(exc))

        model_id = body["model_id"]
        if model_id not in adapters:
            return JSONResponse(
                status_code=404, content={"error": "unknown_model", "model_id": model_id}
            )
        if max(body["width"], body["height"]) > cfg.max_image_side:
            # Checked on the declared dims so oversized payloads are refused
            # before any decode work.
            return _bad_request(
                f"image side exceeds the configured maximum of {cfg.max_image_side}"
            )

        try:
            image = _decode_image(body["image_b64"])
        except BadRequest as exc:
            return _bad_request(str(exc))
        if image.shape[0] != body["height"] or image.shape[1] != body["width"]:
            return _bad_request(
                f"declared {body['width']}x{body['height']} but image decodes to "
                f"{image.shape[1]}x{image.shape[0]}"
            )

        start = time.perf_counter()
        try:
            raw_detections = adapters[model_id].detect(image)
        except Exception:
            logger.exception("inference failed for model %s", model_id)
            return JSONResponse(status_code=500, content={"error": "inference_failed"})
        inference_ms = (time.perf_counter() - start) * 1000.0

        return {
            "frame_id": body["frame_id"],
            "model_id": model_id,
            "inference_ms": inference_ms,
            "detections": [
                {"class_id": class_id, "confidence": confidence, "bbox": list(bbox)}
                for class_id, confidence, bbox in raw_detections
            ],
        }

    return app
