"""FastAPI application implementing the wire protocol."""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .models import MASK_TOKEN, ModelRegistry, SidecarConfig


class EmbedRequest(BaseModel):
    model: Literal["symmetric", "asymmetric"]
    texts: list[str] = Field(min_length=1)


class SentimentRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class FillMaskRequest(BaseModel):
    text: str
    top_k: int = Field(default=5, ge=1, le=100)


class AnnotateRequest(BaseModel):
    texts: list[str]


def create_app(config: Optional[SidecarConfig] = None) -> FastAPI:
    config = config or SidecarConfig.from_env()
    registry = ModelRegistry(config)
    app = FastAPI(title="scoring-sidecar")
    app.state.registry = registry

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request", "detail": exc.errors()})

    @app.exception_handler(Exception)
    async def model_failure(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": type(exc).__name__, "detail": str(exc)})

    def batch_guard(count: int):
        if count > config.max_batch:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {count} exceeds the cap of {config.max_batch}"},
            )
        return None

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "dims": registry.dims()}

    @app.post("/v1/embed")
    def embed(request: EmbedRequest):
        oversized = batch_guard(len(request.texts))
        if oversized:
            return oversized
        dim, vectors = registry.embed(request.model, request.texts)
        return {"dim": dim, "vectors": vectors}

    @app.post("/v1/sentiment")
    def sentiment(request: SentimentRequest):
        oversized = batch_guard(len(request.texts))
        if oversized:
            return oversized
        return {"scores": registry.sentiment(request.texts)}

    @app.post("/v1/fill-mask")
    def fill_mask(request: FillMaskRequest):
        count = request.text.count(MASK_TOKEN)
        if count != 1:
            return JSONResponse(
                status_code=400,
                content={"error": f"expected exactly one {MASK_TOKEN}, found {count}"},
            )
        return {"predictions": registry.fill_mask(request.text, request.top_k)}

    @app.post("/v1/annotate")
    def annotate(request: AnnotateRequest):
        oversized = batch_guard(len(request.texts))
        if oversized:
            return oversized
        return {"annotations": registry.annotate(request.texts)}

    return app
