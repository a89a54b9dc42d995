"""HTTP inference service.

Two endpoints:

    POST /predict   raw PNG or JPEG bytes in the body -> PredictResponse
    GET  /health    {"status": "ok", "model-version": ...}

The model is loaded once at startup and never mutated, so concurrent
requests are safe and equivalent to sequential ones.  Internal faults
surface as 500 with an opaque incident id; the traceback stays in the
server log.
"""

from __future__ import annotations

import logging
import time
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from aquasight.dataset import ImageFormatError, InvalidImageError
from aquasight.network import Network
from aquasight.pipeline import predict_bytes
from aquasight.weights import load_network

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 10 * 1024 * 1024
ACCEPTED_CONTENT_TYPES = ("image/png", "image/jpeg")


class PredictResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    verdict: str = Field(alias="class")
    raw: float
    confidence: float
    model_version: str = Field(alias="model-version")
    latency_ms: float = Field(alias="latency-ms")


class HealthResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    status: str
    model_version: str = Field(alias="model-version")


class ErrorResponse(BaseModel):
    error: str
    id: Optional[str] = None


def _error(status_code: int, message: str, incident_id: Optional[str] = None) -> JSONResponse:
    body = {"error": message}
    if incident_id is not None:
        body["id"] = incident_id
    return JSONResponse(status_code=status_code, content=body)


def create_app(
    model_path=None,
    net: Optional[Network] = None,
    normalize: bool = True,
) -> FastAPI:
    """Build the service around an already-loaded network or a weights path."""
    if net is None:
        if model_path is None:
            raise ValueError("either model_path or net is required")
        net = load_network(model_path)
    net.eval()
    version = net.weights_checksum or "unversioned"

    app = FastAPI(title="aquasight", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", model_version=version)

    @app.post("/predict", responses={400: {"model": ErrorResponse},
                                     415: {"model": ErrorResponse},
                                     500: {"model": ErrorResponse}})
    async def predict_endpoint(request: Request):
        content_type = request.headers.get("content-type", "")
        media_type = content_type.split(";")[0].strip().lower()
        if media_type not in ACCEPTED_CONTENT_TYPES:
            return _error(415, f"unsupported content type {media_type or '(none)'};"
                               " expected image/png or image/jpeg")
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return _error(400, f"body exceeds {MAX_BODY_BYTES} bytes")
        started = time.perf_counter()
        try:
            prediction = predict_bytes(net, body, normalize=normalize)
        except (ImageFormatError, InvalidImageError) as exc:
            return _error(400, str(exc))
        except Exception:
            incident = uuid.uuid4().hex[:12]
            log.exception("predict failed, incident %s", incident)
            return _error(500, "internal error", incident)
        latency_ms = (time.perf_counter() - started) * 1000.0
        response = PredictResponse(
            verdict=prediction.verdict,
            raw=round(prediction.raw, 6),
            confidence=round(prediction.confidence, 6),
            model_version=version,
            latency_ms=round(latency_ms, 3),
        )
        return JSONResponse(content=response.model_dump(by_alias=True))

    return app
