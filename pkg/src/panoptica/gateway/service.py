"""HTTP gateway: the engine behind a small JSON API.

Every response body is the serialization of the corresponding engine
operation's result; the gateway adds only session bookkeeping. Reads run
against the current store; all access is serialized by one lock, and each
mutation persists an atomic snapshot before returning. Navigation state
(focus, filters, anchors) lives server-side, keyed by opaque session tokens
that expire after a configurable idle time.

Status mapping: 200/201 success, 404 unknown object/class/session,
409 conflicts (duplicate keys, incoming links, stale focus), 422 everything
else (validation and kind errors).
"""

from __future__ import annotations

import os
import secrets
import threading
import time
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .. import __version__
from ..errors import (
    CorruptStoreAtStartup,
    EngineError,
    UnknownSession,
    UnsupportedFormat,
)
from ..ingest import ImportMapping, inspect, run_import
from ..recognition import match_report
from ..reports import export_store, list_report, object_report
from ..store import Store
from ..traversal import Clause, Filter, Navigator, Session
from .. import vocabulary as vocab_mod

VOCABULARY_FILE = "vocabulary.json"
OBJECTS_FILE = "objects.json"
DATA_DIR_ENV = "PANOPTICA_DATA_DIR"

DEFAULT_LIMIT = 500
DEFAULT_SESSION_TTL = 3600.0

_NOT_FOUND = {"UnknownObject", "UnknownClass", "UnknownSession"}
_CONFLICT = {"DuplicateKey", "HasIncomingLinks", "RequiredLinkWouldDangle", "StaleFocus"}

_MEDIA_TYPES = {
    "txt": "text/plain; charset=utf-8",
    "csv": "text/csv; charset=utf-8",
    "html": "text/html; charset=utf-8",
    "xml": "application/xml; charset=utf-8",
    "sql": "application/sql; charset=utf-8",
}


def status_for(error: EngineError) -> int:
    if error.code in _NOT_FOUND:
        return 404
    if error.code in _CONFLICT:
        return 409
    return 422


class GatewayState:
    """Vocabulary, store, persistence, and live sessions for one data dir."""

    def __init__(self, data_dir: str | Path, session_ttl: float = DEFAULT_SESSION_TTL) -> None:
        self.data_dir = Path(data_dir)
        self.session_ttl = session_ttl
        self.lock = threading.RLock()
        self._sessions: dict[str, tuple[Navigator, float]] = {}

        vocab_path = self.data_dir / VOCABULARY_FILE
        if not vocab_path.exists():
            raise CorruptStoreAtStartup(f"no vocabulary document at {vocab_path}")
        try:
            self.vocabulary = vocab_mod.load(vocab_path)
            objects_path = self.data_dir / OBJECTS_FILE
            if objects_path.exists():
                self.store = Store.load(objects_path, self.vocabulary)
            else:
                self.store = Store(self.vocabulary)
        except EngineError as exc:
            raise CorruptStoreAtStartup(f"{exc.code}: {exc.message}") from exc

    def persist(self) -> None:
        self.store.save(self.data_dir / OBJECTS_FILE)

    # --- sessions ---------------------------------------------------------

    def create_session(self) -> str:
        token = secrets.token_hex(16)
        self._sessions[token] = (Navigator(self.store, Session()), time.monotonic())
        return token

    def navigator(self, token: str | None) -> Navigator:
        """The navigator for a token, or a throwaway one for stateless calls."""
        if token is None:
            return Navigator(self.store, Session())
        self._expire_sessions()
        entry = self._sessions.get(token)
        if entry is None:
            raise UnknownSession(f"no session {token!r}")
        navigator, _ = entry
        self._sessions[token] = (navigator, time.monotonic())
        return navigator

    def _expire_sessions(self) -> None:
        deadline = time.monotonic() - self.session_ttl
        expired = [t for t, (_, touched) in self._sessions.items() if touched < deadline]
        for token in expired:
            del self._sessions[token]


class ObjectIn(BaseModel):
    class_name: str = Field(alias="class")
    values: dict[str, Any] = Field(default_factory=dict)
    model_config = {"populate_by_name": True}


class PatchIn(BaseModel):
    values: dict[str, Any]


class ClauseIn(BaseModel):
    attribute: str
    predicate: str
    value: Any = None
    low: Any = None
    high: Any = None
    ids: list[int] = Field(default_factory=list)


class FilterIn(BaseModel):
    class_name: str = Field(alias="class")
    clauses: list[ClauseIn] = Field(default_factory=list)
    model_config = {"populate_by_name": True}


class AnchorIn(BaseModel):
    class_name: str = Field(alias="class")
    id: int
    model_config = {"populate_by_name": True}


class InspectIn(BaseModel):
    text: str


class MappingIn(BaseModel):
    class_name: str = Field(alias="class")
    column_map: dict[str, str]
    link_resolution: dict[str, str] = Field(default_factory=dict)
    unresolved_policy: str = "reject_row"
    model_config = {"populate_by_name": True}


class CommitIn(BaseModel):
    mapping: MappingIn
    text: str


def create_app(data_dir: str | Path | None = None, session_ttl: float = DEFAULT_SESSION_TTL) -> FastAPI:
    """Build the application bound to a data directory (argument, else the
    PANOPTICA_DATA_DIR environment variable, else the working directory)."""
    resolved = Path(data_dir if data_dir is not None else os.environ.get(DATA_DIR_ENV, "."))
    state = GatewayState(resolved, session_ttl)
    app = FastAPI(title="panoptica", version=__version__)
    app.state.engine = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, error: EngineError) -> JSONResponse:
        return JSONResponse(status_code=status_for(error), content={"code": error.code, "message": error.message})

    # --- vocabulary & classes -------------------------------------------

    @app.get("/vocabulary")
    def get_vocabulary() -> dict[str, Any]:
        with state.lock:
            return vocab_mod.to_document(state.vocabulary)

    @app.get("/classes")
    def get_classes(session: str | None = None) -> list[dict[str, Any]]:
        with state.lock:
            navigator = state.navigator(session)
            return [{"class": name, "count": count} for name, count in navigator.list_classes()]

    @app.get("/classes/{class_name}/objects")
    def get_objects(
        class_name: str, session: str | None = None, limit: int = Query(DEFAULT_LIMIT, ge=1)
    ) -> list[dict[str, Any]]:
        with state.lock:
            navigator = state.navigator(session)
            objects = navigator.select_class(class_name)
            return [{"id": o.id, "label": o.label} for o in objects[:limit]]

    # --- objects ------------------------------------------------------------

    @app.post("/objects", status_code=201)
    def post_object(body: ObjectIn) -> dict[str, Any]:
        with state.lock:
            object_id = state.store.insert(body.class_name, body.values)
            state.persist()
            return {"id": object_id}

    @app.patch("/objects/{object_id}")
    def patch_object(object_id: int, body: PatchIn) -> dict[str, Any]:
        with state.lock:
            state.store.update(object_id, body.values)
            state.persist()
            return {"id": object_id}

    @app.delete("/objects/{object_id}")
    def delete_object(object_id: int, detach: bool = False) -> dict[str, Any]:
        with state.lock:
            state.store.delete(object_id, detach=detach)
            state.persist()
            return {"id": object_id, "deleted": True}

    @app.get("/objects/{object_id}/view")
    def get_view(object_id: int, session: str | None = None) -> dict[str, Any]:
        with state.lock:
            navigator = state.navigator(session)
            return navigator.focus(object_id).to_payload()

    # --- sessions --------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def post_session() -> dict[str, str]:
        with state.lock:
            return {"token": state.create_session()}

    @app.put("/sessions/{token}/filter", status_code=204)
    def put_filter(token: str, body: FilterIn) -> Response:
        with state.lock:
            navigator = state.navigator(token)
            clauses = tuple(
                Clause(
                    attribute=c.attribute,
                    predicate=c.predicate,
                    value=c.value,
                    low=c.low,
                    high=c.high,
                    ids=frozenset(c.ids),
                )
                for c in body.clauses
            )
            navigator.set_filter(Filter(body.class_name, clauses))
            return Response(status_code=204)

    @app.delete("/sessions/{token}/filter/{class_name}", status_code=204)
    def delete_filter(token: str, class_name: str) -> Response:
        with state.lock:
            state.navigator(token).clear_filter(class_name)
            return Response(status_code=204)

    @app.put("/sessions/{token}/anchor", status_code=204)
    def put_anchor(token: str, body: AnchorIn) -> Response:
        with state.lock:
            state.navigator(token).set_anchor(body.class_name, body.id)
            return Response(status_code=204)

    @app.delete("/sessions/{token}/anchor/{class_name}", status_code=204)
    def delete_anchor(token: str, class_name: str) -> Response:
        with state.lock:
            state.navigator(token).clear_anchor(class_name)
            return Response(status_code=204)

    # --- import -------------------------------------------------------------------

    @app.post("/import/inspect")
    def post_inspect(body: InspectIn) -> dict[str, Any]:
        with state.lock:
            result = inspect(state.vocabulary, body.text, state.store)
            return {
                "headers": list(result.headers),
                "delimiter": result.delimiter,
                "matches": [
                    {
                        "class": m.class_name,
                        "score": float(m.score),
                        "matched": sorted(m.matched),
                        "missing_required": sorted(m.missing_required),
                        "value_compat": float(m.value_compat),
                        "summary": match_report(m),
                    }
                    for m in result.matches
                ],
                "mapping": {
                    "class": result.mapping.class_name,
                    "column_map": dict(result.mapping.column_map),
                    "link_resolution": dict(result.mapping.link_resolution),
                    "unresolved_policy": result.mapping.unresolved_policy,
                },
            }

    @app.post("/import/commit")
    def post_commit(body: CommitIn) -> dict[str, Any]:
        with state.lock:
            mapping = ImportMapping(
                class_name=body.mapping.class_name,
                column_map=body.mapping.column_map,
                link_resolution=body.mapping.link_resolution,
                unresolved_policy=body.mapping.unresolved_policy,
            )
            report = run_import(state.store, mapping, body.text)
            state.persist()
            return report.to_payload()

    # --- reports & export ----------------------------------------------------------

    @app.get("/reports/object/{object_id}")
    def get_object_report(object_id: int, format: str = "txt") -> Response:
        with state.lock:
            document = object_report(state.store, object_id, format)
            return Response(content=document, media_type=_media_type(format))

    @app.get("/reports/list")
    def get_list_report(
        class_name: str = Query(alias="class"), format: str = "txt", columns: str | None = None
    ) -> Response:
        with state.lock:
            column_list = [c for c in columns.split(",") if c] if columns else []
            document = list_report(state.store, class_name, None, column_list, format)
            return Response(content=document, media_type=_media_type(format))

    @app.get("/export")
    def get_export(format: str = "sql") -> Response:
        with state.lock:
            document = export_store(state.store, state.vocabulary, format)
            return Response(content=document, media_type=_media_type(format))

    return app


def _media_type(fmt: str) -> str:
    media = _MEDIA_TYPES.get(fmt)
    if media is None:
        raise UnsupportedFormat(f"unknown format {fmt!r}")
    return media
