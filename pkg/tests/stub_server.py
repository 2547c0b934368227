"""Minimal in-process HTTP detector stubs for client and CLI tests."""

from __future__ import annotations

import hashlib
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class ConformingHandler(BaseHTTPRequestHandler):
    """A by-the-book detector service with one deterministic 'stub' model."""

    models = ["stub"]

    def log_message(self, *args):
        pass

    def _send_json(self, status: int, obj) -> None:
        body = json.dumps(obj).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/health":
            self._send_json(200, {"status": "ok"})
        elif self.path == "/v1/models":
            self._send_json(200, self.models)
        else:
            self._send_json(404, {"error": "not_found"})

    def do_POST(self):
        if self.path != "/v1/detect":
            self._send_json(404, {"error": "not_found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            request = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            self._send_json(400, {"error": "bad_request", "detail": "body is not JSON"})
            return
        model_id = request.get("model_id")
        if model_id not in self.models:
            self._send_json(404, {"error": "unknown_model", "model_id": model_id})
            return
        image_b64 = request.get("image_b64", "")
        if not self._looks_like_png(image_b64):
            self._send_json(400, {"error": "bad_request", "detail": "image is not a decodable PNG"})
            return
        # Deterministic fake box derived from the image bytes.
        digest = hashlib.sha256(image_b64.encode()).digest()
        cx = 0.25 + digest[0] / 512.0
        cy = 0.25 + digest[1] / 512.0
        confidence = 0.5 + digest[2] / 512.0
        self._send_json(
            200,
            {
                "frame_id": request.get("frame_id"),
                "model_id": model_id,
                "inference_ms": 1.25,
                "detections": [
                    {"class_id": 0, "confidence": confidence, "bbox": [cx, cy, 0.2, 0.2]}
                ],
            },
        )

    @staticmethod
    def _looks_like_png(image_b64: str) -> bool:
        import base64

        try:
            raw = base64.b64decode(image_b64.encode(), validate=True)
        except Exception:
            return False
        return raw.startswith(b"\x89PNG\r\n\x1a\n")


class ScriptedHandler(BaseHTTPRequestHandler):
    """Returns whatever the test scripted: (status, body_text, delay_s)."""

    script: dict[str, tuple[int, str, float]] = {}

    def log_message(self, *args):
        pass

    def _respond(self):
        status, body, delay = self.script.get(self.path, (404, "{}", 0.0))
        if delay:
            time.sleep(delay)
        data = body.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._respond()

    def do_POST(self):
        if self.headers.get("Content-Length"):
            self.rfile.read(int(self.headers["Content-Length"]))
        self._respond()


class StubServer:
    """Context manager running a handler class on an ephemeral port."""

    def __init__(self, handler_cls):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), handler_cls)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
