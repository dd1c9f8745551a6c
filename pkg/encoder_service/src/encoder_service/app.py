"""FastAPI application exposing the encoder wire contract.

POST /embed {"kind", "payload", "frame_index"?, "concept"?} -> {"dim", "values"}
POST /tags  {"uri"} -> {"tags": [5 strings]}
GET  /meta  -> {"dims": {...}, "family": "audio|video|text"}

Schema violations answer 400, requests during model load answer 503,
anything else answers 500 with an opaque message.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .registry import ModelRegistry, RegistryConfig


class EmbedRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["text", "audio", "video", "image", "video_conditioned"]
    payload: str
    frame_index: int | None = None
    concept: str | None = None


class TagsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    uri: str


def create_app(config: RegistryConfig, defer_load: bool = False) -> FastAPI:
    """Build the service; loads weights at startup unless deferred."""
    registry = ModelRegistry(config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if not defer_load:
            registry.load()
        yield

    app = FastAPI(title="encoder-service", lifespan=lifespan)
    app.state.registry = registry

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "schema violation"})

    @app.exception_handler(Exception)
    async def _opaque_handler(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": "internal error"})

    def _unready() -> JSONResponse:
        return JSONResponse(status_code=503, content={"error": "models loading"})

    @app.get("/meta")
    async def meta():
        if not registry.ready:
            return _unready()
        return {"dims": registry.dims, "family": config.family}

    @app.post("/embed")
    async def embed(request: EmbedRequest):
        if not registry.ready:
            return _unready()
        vec = registry.embed(
            request.kind, request.payload, request.frame_index, request.concept
        )
        return {"dim": int(vec.shape[0]), "values": [float(x) for x in vec]}

    @app.post("/tags")
    async def tags(request: TagsRequest):
        if not registry.ready:
            return _unready()
        return {"tags": registry.tag_audio(request.uri)}

    return app
