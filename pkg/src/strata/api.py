"""HTTP surface for the engine: session CRUD plus the drops endpoint.

The API is deliberately small: the UI creates a session, reads it, and posts
drops; every response body reuses the same JSON schemas the engine uses
internally, and drop responses carry only the delta so clients can patch
incrementally. Provider credentials live in the server process (environment
variable), never in request or response bodies.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dataset import Dataset, load_dataset
from .errors import (
    LlmFailure,
    MissingFixture,
    StrataError,
    TransportError,
    UnknownChart,
    UnknownSession,
)
from .interaction import DropTarget
from .llm import Provider
from .packets import DragPacket
from .session import SessionStore, create_session, save_session

_STATUS_BY_CODE: dict[type, int] = {
    UnknownSession: 404,
    UnknownChart: 404,
    TransportError: 502,
    MissingFixture: 502,
    LlmFailure: 502,
}


class CreateSessionRequest(BaseModel):
    goal: str
    dataset: dict | None = None
    dataset_path: str | None = None
    key_field: str | None = None
    name: str | None = None
    nl_description: str = ""
    units: dict[str, str] | None = None
    descriptions: dict[str, str] | None = None


class DropRequest(BaseModel):
    packet: dict
    target: dict


class SaveRequest(BaseModel):
    path: str


def _dataset_from_request(body: CreateSessionRequest) -> Dataset:
    if body.dataset is not None:
        return Dataset.from_json(body.dataset)
    if body.dataset_path is None or body.key_field is None:
        raise StrataError("request needs either a dataset object or dataset_path + key_field")
    path = Path(body.dataset_path)
    return load_dataset(
        path,
        name=body.name or path.stem,
        nl_description=body.nl_description,
        key_field=body.key_field,
        units=body.units,
        descriptions=body.descriptions,
    )


def create_app(
    provider: Provider,
    store: SessionStore | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="strata", version="0.1.0")
    app.state.store = store if store is not None else SessionStore()
    app.state.provider = provider

    @app.exception_handler(StrataError)
    async def strata_error_handler(request: Request, exc: StrataError):
        status = 400
        for cls, mapped in _STATUS_BY_CODE.items():
            if isinstance(exc, cls):
                status = mapped
                break
        return JSONResponse(status_code=status, content={"error": exc.to_json()})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def post_sessions(body: CreateSessionRequest):
        dataset = _dataset_from_request(body)
        session = create_session(dataset, body.goal, app.state.provider)
        app.state.store.add(session)
        return {"session": session.to_json()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = app.state.store.get(session_id)
        return {"session": session.to_json()}

    @app.post("/sessions/{session_id}/drops")
    def post_drop(session_id: str, body: DropRequest):
        packet = DragPacket.from_json(body.packet)
        target = DropTarget.from_json(body.target)
        effect = app.state.store.drop(session_id, packet, target, app.state.provider)
        session = app.state.store.get(session_id)
        return {"delta": effect.to_json(), "updated_at": session.updated_at}

    @app.get("/sessions/{session_id}/charts")
    def get_charts(session_id: str):
        session = app.state.store.get(session_id)
        return {
            "charts": [c.to_json() for c in session.charts],
            "chart_numbers": dict(session.chart_numbers),
        }

    @app.post("/sessions/{session_id}/save")
    def post_save(session_id: str, body: SaveRequest):
        session = app.state.store.get(session_id)
        path = save_session(session, body.path)
        return {"path": str(path)}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
