"""Black-box contract suite, run against the live service and against the
in-process mock encoder from the consumer library: both must pass the
same checks (schema, /meta-dim agreement, tag arity, finite unit-norm
vectors, repeat-call stability)."""

from __future__ import annotations

import math

import httpx
import numpy as np
import pytest

KINDS = ("text", "audio", "video", "image", "video_conditioned")


class WireCaller:
    """Talks to the live service over HTTP."""

    def __init__(self, base_url: str):
        self.base_url = base_url

    def meta(self) -> dict:
        response = httpx.get(f"{self.base_url}/meta", timeout=10.0)
        assert response.status_code == 200
        return response.json()

    def embed(self, **body) -> dict:
        response = httpx.post(f"{self.base_url}/embed", json=body, timeout=30.0)
        assert response.status_code == 200, response.text
        return response.json()

    def tags(self, uri: str) -> list[str]:
        response = httpx.post(f"{self.base_url}/tags", json={"uri": uri}, timeout=10.0)
        assert response.status_code == 200
        return response.json()["tags"]


class MockCaller:
    """Adapts the consumer library's mock encoder to the same surface."""

    def __init__(self):
        from vatkg.clients import MockEncoder

        self.encoder = MockEncoder(
            family="video",
            dims={kind: 16 for kind in KINDS},
        )

    def meta(self) -> dict:
        meta = self.encoder.meta()
        return {"dims": meta.dims, "family": meta.family}

    def embed(self, **body) -> dict:
        kind = body["kind"]
        payload = body["payload"]
        if kind == "text":
            vec = self.encoder.embed_text(payload)
        elif kind == "audio":
            vec = self.encoder.embed_audio(payload)
        elif kind == "video":
            vec = self.encoder.embed_video(payload)
        elif kind == "image":
            vec = self.encoder.embed_image(payload, body.get("frame_index", 0))
        else:
            vec = self.encoder.embed_video_conditioned(payload, body.get("concept", ""))
        return {"dim": int(vec.shape[0]), "values": [float(x) for x in vec]}

    def tags(self, uri: str) -> list[str]:
        return self.encoder.tag_audio(uri)


@pytest.fixture(params=["live", "mock"])
def caller(request, live_service):
    if request.param == "live":
        return WireCaller(live_service)
    pytest.importorskip("vatkg")
    return MockCaller()


def _embed_body(kind: str) -> dict:
    body = {"kind": kind, "payload": "demo payload" if kind == "text" else "media://demo"}
    if kind == "image":
        body["frame_index"] = 2
    if kind == "video_conditioned":
        body["concept"] = "engine"
    return body


def test_meta_advertises_all_kinds(caller):
    meta = caller.meta()
    assert set(meta["dims"]) >= set(KINDS)
    assert all(isinstance(d, int) and d >= 2 for d in meta["dims"].values())
    assert meta["family"] in ("audio", "video", "text")


@pytest.mark.parametrize("kind", KINDS)
def test_embed_dims_agree_with_meta(caller, kind):
    meta = caller.meta()
    doc = caller.embed(**_embed_body(kind))
    assert doc["dim"] == meta["dims"][kind]
    assert len(doc["values"]) == doc["dim"]


@pytest.mark.parametrize("kind", KINDS)
def test_embed_vectors_finite_unit_norm(caller, kind):
    values = np.asarray(caller.embed(**_embed_body(kind))["values"], dtype=np.float64)
    assert np.all(np.isfinite(values))
    assert abs(float(np.linalg.norm(values)) - 1.0) < 1e-6


def test_tags_exactly_five_strings(caller):
    tags = caller.tags("media://some-audio")
    assert len(tags) == 5
    assert all(isinstance(t, str) and t for t in tags)
    assert tags == caller.tags("media://some-audio")


@pytest.mark.parametrize("kind", KINDS)
def test_repeat_call_cosine_is_one(caller, kind):
    body = _embed_body(kind)
    first = np.asarray(caller.embed(**body)["values"], dtype=np.float64)
    second = np.asarray(caller.embed(**body)["values"], dtype=np.float64)
    cosine = float(np.dot(first, second) / (np.linalg.norm(first) * np.linalg.norm(second)))
    assert abs(cosine - 1.0) < 1e-5


def test_distinct_payloads_distinct_vectors(caller):
    a = caller.embed(kind="text", payload="a quokka forages")["values"]
    b = caller.embed(kind="text", payload="a locomotive departs")["values"]
    assert a != b


def test_conditioning_changes_the_vector(caller):
    base = {"kind": "video_conditioned", "payload": "media://clip"}
    a = caller.embed(**base, concept="engine")["values"]
    b = caller.embed(**base, concept="goal")["values"]
    assert a != b


# --- wire-only checks against the live service -----------------------------------


def test_unknown_kind_is_400(live_service):
    response = httpx.post(
        f"{live_service}/embed", json={"kind": "smell", "payload": "x"}, timeout=10.0
    )
    assert response.status_code == 400


def test_missing_payload_is_400(live_service):
    response = httpx.post(f"{live_service}/embed", json={"kind": "text"}, timeout=10.0)
    assert response.status_code == 400


def test_extra_field_is_400(live_service):
    response = httpx.post(
        f"{live_service}/embed",
        json={"kind": "text", "payload": "x", "surprise": 1},
        timeout=10.0,
    )
    assert response.status_code == 400


def test_tags_schema_violation_is_400(live_service):
    response = httpx.post(f"{live_service}/tags", json={"url": "typo"}, timeout=10.0)
    assert response.status_code == 400


def test_unready_service_answers_503(weights_dir):
    from fastapi.testclient import TestClient

    from encoder_service.app import create_app
    from encoder_service.registry import RegistryConfig

    app = create_app(RegistryConfig(weights_dir=str(weights_dir)), defer_load=True)
    with TestClient(app) as client:
        client.app.state.registry.ready = False
        assert client.get("/meta").status_code == 503
        assert (
            client.post("/embed", json={"kind": "text", "payload": "x"}).status_code == 503
        )


def test_consumer_http_client_interop(live_service):
    """The consumer library's HTTP client works against this service."""
    vatkg = pytest.importorskip("vatkg")
    from vatkg.clients import HttpEncoderClient

    client = HttpEncoderClient(live_service)
    meta = client.meta()
    assert set(meta.dims) >= set(KINDS)
    vec = client.embed_text("an engine idles")
    assert vec.shape == (meta.dims["text"],)
    assert len(client.tag_audio("media://clip")) == 5
    conditioned = client.embed_video_conditioned("media://clip", "engine")
    assert conditioned.shape == (meta.dims["video_conditioned"],)
