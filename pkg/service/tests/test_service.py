import numpy as np
import pytest
from fastapi.testclient import TestClient

from detector_service.adapters import StubAdapter, resolve_adapters
from detector_service.app import build_app
from detector_service.config import ConfigError, ServiceConfig, load_config

from conftest import detect_request, load_golden


def gradient(width=8, height=6):
    ys, xs = np.mgrid[0:height, 0:width]
    return np.stack([xs * 30, ys * 40, (xs + ys) * 10], axis=-1).astype(np.uint8)


class TestHealthAndModels:
    def test_health(self, client):
        response = client.get("/v1/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_models_lists_stub(self, client):
        response = client.get("/v1/models")
        assert response.status_code == 200
        assert response.json() == ["stub"]


class TestDetect:
    def test_openapi_docs_disabled(self, client):
        assert client.get("/docs").status_code == 404

    def test_golden_request_reproduces_expected_response(self, client):
        response = client.post("/v1/detect", json=load_golden("stub_request.json"))
        assert response.status_code == 200
        body = response.json()
        inference_ms = body.pop("inference_ms")
        assert inference_ms >= 0.0
        assert body == load_golden("stub_response_expected.json")

    def test_response_schema_and_ranges(self, client):
        response = client.post("/v1/detect", json=detect_request(gradient()))
        body = response.json()
        assert set(body) == {"frame_id", "model_id", "inference_ms", "detections"}
        assert body["frame_id"] == "f0" and body["model_id"] == "stub"
        for det in body["detections"]:
            assert isinstance(det["class_id"], int)
            assert 0.0 <= det["confidence"] <= 1.0
            assert len(det["bbox"]) == 4
            assert all(0.0 <= v <= 1.0 for v in det["bbox"])

    def test_deterministic_per_image(self, client):
        request = detect_request(gradient())
        first = client.post("/v1/detect", json=request).json()
        second = client.post("/v1/detect", json=request).json()
        assert first["detections"] == second["detections"]

    def test_different_images_move_the_box(self, client):
        bright_left = np.zeros((8, 8, 3), np.uint8)
        bright_left[:, :2] = 255
        bright_right = np.zeros((8, 8, 3), np.uint8)
        bright_right[:, 6:] = 255
        left = client.post("/v1/detect", json=detect_request(bright_left)).json()
        right = client.post("/v1/detect", json=detect_request(bright_right)).json()
        assert left["detections"][0]["bbox"][0] < right["detections"][0]["bbox"][0]

    def test_unknown_model_contract(self, client):
        request = detect_request(gradient(), model_id="missing")
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 404
        assert response.json() == {"error": "unknown_model", "model_id": "missing"}

    def test_undecodable_image_contract(self, client):
        request = detect_request(gradient())
        request["image_b64"] = "bm90IGEgcG5n"
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 400
        body = response.json()
        assert body["error"] == "bad_request" and "detail" in body

    def test_bad_base64_rejected(self, client):
        request = detect_request(gradient())
        request["image_b64"] = "@@@not-base64@@@"
        assert client.post("/v1/detect", json=request).status_code == 400

    def test_dimension_mismatch_rejected(self, client):
        request = detect_request(gradient())
        request["width"] = 32
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 400
        assert "decodes to" in response.json()["detail"]

    @pytest.mark.parametrize("mutate", [
        lambda r: r.pop("frame_id"),
        lambda r: r.pop("image_b64"),
        lambda r: r.__setitem__("lux", "bright"),
        lambda r: r.__setitem__("width", 0),
    ])
    def test_malformed_body_rejected(self, client, mutate):
        request = detect_request(gradient())
        mutate(request)
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 400
        assert response.json()["error"] == "bad_request"

    def test_not_json_rejected(self, client):
        response = client.post(
            "/v1/detect", content=b"frame=1", headers={"Content-Type": "application/json"}
        )
        assert response.status_code == 400

    def test_oversized_image_rejected(self):
        cfg = ServiceConfig(max_image_side=16)
        service = TestClient(build_app(cfg))
        response = service.post("/v1/detect", json=detect_request(gradient(32, 8)))
        assert response.status_code == 400
        assert "maximum" in response.json()["detail"]

    def test_inference_failure_contract(self, monkeypatch):
        class ExplodingAdapter:
            def detect(self, image):
                raise RuntimeError("weights corrupted")

        from detector_service import adapters as adapters_mod

        monkeypatch.setitem(adapters_mod._BUILTINS, "stub", ExplodingAdapter)
        client = TestClient(build_app(ServiceConfig()))
        response = client.post("/v1/detect", json=detect_request(gradient()))
        assert response.status_code == 500
        assert response.json() == {"error": "inference_failed"}


class TestStubAdapter:
    def test_black_image_centers_box(self):
        detections = StubAdapter().detect(np.zeros((8, 8, 3), np.uint8))
        assert detections[0][2][:2] == (0.5, 0.5)

    def test_confidence_bounds(self):
        lo = StubAdapter().detect(np.zeros((4, 4, 3), np.uint8))[0][1]
        hi = StubAdapter().detect(np.full((4, 4, 3), 255, np.uint8))[0][1]
        assert lo == pytest.approx(0.1)
        assert hi == pytest.approx(0.9)


class TestConfig:
    def test_missing_weights_fails_startup(self, tmp_path):
        cfg = ServiceConfig(models={"real": str(tmp_path / "weights.pt")})
        with pytest.raises(ConfigError, match="weights.pt"):
            cfg.validate()

    def test_existing_weights_without_adapter_fails_resolution(self, tmp_path):
        weights = tmp_path / "weights.pt"
        weights.write_bytes(b"\x00")
        cfg = ServiceConfig(models={"real": str(weights)})
        cfg.validate()
        with pytest.raises(ConfigError, match="no adapter"):
            resolve_adapters(cfg)

    def test_empty_model_map_rejected(self):
        with pytest.raises(ConfigError, match="empty"):
            ServiceConfig(models={}).validate()

    def test_ini_round_trip_with_env_overrides(self, tmp_path, monkeypatch):
        ini = tmp_path / "service.ini"
        ini.write_text(
            "[service]\nhost = 0.0.0.0\nport = 9000\nmax_image_side = 640\n"
            "[models]\nstub = builtin:stub\n"
        )
        cfg = load_config(ini)
        assert cfg.host == "0.0.0.0" and cfg.port == 9000 and cfg.max_image_side == 640
        monkeypatch.setenv("DETECTOR_SERVICE_HOST", "127.0.0.2")
        monkeypatch.setenv("DETECTOR_SERVICE_PORT", "9100")
        cfg = load_config(ini)
        assert cfg.host == "127.0.0.2" and cfg.port == 9100

    def test_bad_port_env_rejected(self, monkeypatch):
        monkeypatch.setenv("DETECTOR_SERVICE_PORT", "not-a-port")
        with pytest.raises(ConfigError, match="PORT"):
            load_config(None)

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.ini")
