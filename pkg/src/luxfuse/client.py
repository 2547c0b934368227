"""HTTP client for the remote detection service, plus a conformance probe."""

from __future__ import annotations


import numpy as np
import requests

from . import protocol
from .detection import DetectionResult
from .frames import Frame, Modality
from .protocol import DetectorError, MalformedResponseError

DEFAULT_TIMEOUT_MS = 2000.0


class DetectorTimeoutError(DetectorError):
    """The request exceeded the configured timeout."""


class TransportError(DetectorError):
    """The request could not be completed at the HTTP level."""


class UnknownModelError(DetectorError):
    """The server does not know the requested model_id."""


class RemoteDetector:
    """Backend that forwards frames to a detection server over HTTP.

    Every call either returns a DetectionResult or raises one of the typed
    errors above (MalformedResponseError included); the pipeline maps any of
    them to an empty-detection frame so the actuation loop keeps cycling.
    """

    def __init__(
        self,
        endpoint: str,
        timeout_ms: float = DEFAULT_TIMEOUT_MS,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_ms / 1000.0
        self._session = session or requests.Session()

    def detect(
        self, frame: Frame, model_id: str, *, frame_id: str | None = None, lux: float = 0.0
    ) -> DetectionResult:
        fid = frame_id if frame_id is not None else str(frame.timestamp_ms)
        request = protocol.build_detect_request(frame, model_id, fid, lux)
        try:
            resp = self._session.post(
                self.endpoint + protocol.DETECT_PATH, json=request, timeout=self.timeout_s
            )
        except requests.Timeout as exc:
            raise DetectorTimeoutError(f"detect timed out after {self.timeout_s * 1000:.0f} ms") from exc
        except requests.RequestException as exc:
            raise TransportError(f"detect transport failure: {exc}") from exc

        if resp.status_code == 404:
            raise UnknownModelError(f"server does not know model {model_id!r}")
        if resp.status_code != 200:
            raise TransportError(f"detect returned HTTP {resp.status_code}: {resp.text[:200]}")

        result = protocol.parse_detect_response(resp.text)
        if result.frame_id != fid or result.model_id != model_id:
            raise MalformedResponseError(
                f"response echo mismatch: got ({result.frame_id!r}, {result.model_id!r}), "
                f"sent ({fid!r}, {model_id!r})"
            )
        return result

    def list_models(self) -> list[str]:
        try:
            resp = self._session.get(self.endpoint + protocol.MODELS_PATH, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise DetectorTimeoutError("model list timed out") from exc
        except requests.RequestException as exc:
            raise TransportError(f"model list transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"model list returned HTTP {resp.status_code}")
        try:
            models = resp.json()
        except ValueError as exc:
            raise MalformedResponseError("model list is not valid JSON") from exc
        if not isinstance(models, list) or any(not isinstance(m, str) for m in models):
            raise MalformedResponseError("model list must be a JSON array of strings")
        return models

    def health(self) -> dict:
        try:
            resp = self._session.get(self.endpoint + protocol.HEALTH_PATH, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise DetectorTimeoutError("health check timed out") from exc
        except requests.RequestException as exc:
            raise TransportError(f"health check transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"health check returned HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponseError("health body is not valid JSON") from exc


def _probe_frame() -> Frame:
    """Small deterministic gradient frame used by the conformance probe."""
    ys, xs = np.mgrid[0:32, 0:32]
    pixels = np.stack([xs * 8, ys * 8, (xs + ys) * 4], axis=-1).astype(np.uint8)
    return Frame(pixels, Modality.FUSED, timestamp_ms=0)


def protocol_check(endpoint: str, timeout_ms: float = DEFAULT_TIMEOUT_MS) -> list[str]:
    """Probe a live detection service for wire-protocol conformance.

    Returns a list of human-readable violations; an empty list means the
    service conforms.
    """
    violations: list[str] = []
    client = RemoteDetector(endpoint, timeout_ms=timeout_ms)

    try:
        health = client.health()
        if health != {"status": "ok"}:
            violations.append(f"/v1/health body must be {{'status': 'ok'}}, got {health!r}")
    except DetectorError as exc:
        violations.append(f"/v1/health failed: {exc}")
        return violations

    models: list[str] = []
    try:
        models = client.list_models()
        if not models:
            violations.append("/v1/models returned an empty model list")
    except (DetectorError, MalformedResponseError) as exc:
        violations.append(f"/v1/models failed: {exc}")

    frame = _probe_frame()
    if models:
        model_id = "stub" if "stub" in models else models[0]
        try:
            first = client.detect(frame, model_id, frame_id="probe-0", lux=500.0)
            second = client.detect(frame, model_id, frame_id="probe-0", lux=500.0)
            if first.detections != second.detections:
                violations.append(
                    f"/v1/detect is not deterministic for identical requests on {model_id!r}"
                )
        except (DetectorError, MalformedResponseError) as exc:
            violations.append(f"/v1/detect failed for model {model_id!r}: {exc}")

    # Unknown model must yield the 404 contract body.
    request = protocol.build_detect_request(frame, "no-such-model-000", "probe-404", 0.0)
    try:
        resp = requests.post(
            endpoint.rstrip("/") + protocol.DETECT_PATH, json=request, timeout=timeout_ms / 1000.0
        )
        if resp.status_code != 404:
            violations.append(f"unknown model_id returned HTTP {resp.status_code}, expected 404")
        else:
            body = resp.json()
            if body.get("error") != "unknown_model" or body.get("model_id") != "no-such-model-000":
                violations.append(f"unknown-model 404 body malformed: {body!r}")
    except (requests.RequestException, ValueError) as exc:
        violations.append(f"unknown-model probe failed: {exc}")

    # An undecodable image must yield the 400 contract body.
    bad = dict(request)
    bad["model_id"] = "stub" if "stub" in models else (models[0] if models else "stub")
    bad["image_b64"] = "bm90IGEgcG5n"  # valid base64, not a PNG
    try:
        resp = requests.post(
            endpoint.rstrip("/") + protocol.DETECT_PATH, json=bad, timeout=timeout_ms / 1000.0
        )
        if resp.status_code != 400:
            violations.append(f"undecodable image returned HTTP {resp.status_code}, expected 400")
        else:
            body = resp.json()
            if body.get("error") != "bad_request" or "detail" not in body:
                violations.append(f"bad-request 400 body malformed: {body!r}")
    except (requests.RequestException, ValueError) as exc:
        violations.append(f"bad-request probe failed: {exc}")

    return violations
