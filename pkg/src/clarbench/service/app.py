"""HTTP surface of the annotation service.

Annotator endpoints authenticate with a bearer token; admin endpoints require
the admin token from the environment.  The frontend bundle, when present, is
served statically from the configured directory.
"""

from __future__ import annotations

import json
import os
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .state import CampaignService, ServiceError

ADMIN_TOKEN_ENV = "CLARBENCH_ADMIN_TOKEN"


def _token(authorization: str | None) -> str:
    if not authorization:
        raise HTTPException(status_code=401, detail="missing token")
    if authorization.startswith("Bearer "):
        return authorization[len("Bearer ") :]
    return authorization


def create_app(service: CampaignService, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="annotation service")

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=exc.status, content={"detail": str(exc)})

    @app.post("/api/login")
    async def login(body: dict[str, Any]):
        return service.login(body.get("token", ""))

    @app.get("/api/task")
    async def task(authorization: str | None = Header(default=None)):
        return service.next_task(_token(authorization))

    @app.post("/api/annotations")
    async def annotations(body: dict[str, Any], authorization: str | None = Header(default=None)):
        return service.submit(_token(authorization), body)

    @app.post("/api/clarify/regenerate")
    async def regenerate(body: dict[str, Any], authorization: str | None = Header(default=None)):
        return service.regenerate(_token(authorization), body)

    @app.post("/api/skip")
    async def skip(body: dict[str, Any], authorization: str | None = Header(default=None)):
        return service.skip(_token(authorization), body)

    @app.get("/api/me/annotations")
    async def me_annotations(authorization: str | None = Header(default=None)):
        return service.my_annotations(_token(authorization))

    @app.get("/api/admin/annotations")
    async def admin_annotations(authorization: str | None = Header(default=None)):
        return service.all_annotations(_token(authorization))

    @app.get("/api/admin/export")
    async def admin_export(
        kind: str = "records", authorization: str | None = Header(default=None)
    ):
        data = service.export(_token(authorization))
        if kind not in data:
            raise HTTPException(status_code=400, detail=f"unknown export kind {kind!r}")
        lines = "\n".join(json.dumps(row, ensure_ascii=False, sort_keys=True) for row in data[kind])
        return PlainTextResponse(lines + ("\n" if lines else ""), media_type="application/jsonl")

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
