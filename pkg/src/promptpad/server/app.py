"""HTTP/WebSocket shell around the Hub.

Admin surface: create-document, get-snapshot (structured-text block
records), get-history (newline-delimited version records), get-view (UI
view model), get-explain, health. The channel endpoint /ws speaks the frame
protocol; per-document handling is serialized behind one asyncio lock, so
the service core sees the same ordering discipline as the simulator.
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from ..history import export_records
from ..protocol import Frame, HELLO, ProtocolError
from .service import Hub, UnknownDocument

logger = logging.getLogger(__name__)


def create_app(hub: Hub, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="promptpad")
    locks: dict[str, asyncio.Lock] = {}
    sockets: dict[tuple[str, str], WebSocket] = {}

    def lock_for(doc_id: str) -> asyncio.Lock:
        if doc_id not in locks:
            locks[doc_id] = asyncio.Lock()
        return locks[doc_id]

    def session_or_404(doc_id: str):
        try:
            return hub.get(doc_id)
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id}")

    @app.get("/health")
    def health():
        return {"ok": True, "documents": sorted(hub.docs)}

    @app.post("/docs")
    def create_document(body: dict):
        doc_id = body.get("docId")
        if not doc_id:
            raise HTTPException(status_code=400, detail="docId required")
        hub.create_document(doc_id)
        return {"docId": doc_id}

    @app.get("/docs/{doc_id}/snapshot", response_class=PlainTextResponse)
    def get_snapshot(doc_id: str):
        return session_or_404(doc_id).replica.state.snapshot_text()

    @app.get("/docs/{doc_id}/history/{block_id}", response_class=PlainTextResponse)
    def get_history(doc_id: str, block_id: str):
        session = session_or_404(doc_id)
        return export_records(session.replica.state.history.get(block_id, []))

    @app.get("/docs/{doc_id}/view")
    def get_view(doc_id: str):
        return session_or_404(doc_id).view_model()

    @app.get("/docs/{doc_id}/explain/{block_id}")
    def get_explain(doc_id: str, block_id: str):
        session = session_or_404(doc_id)
        try:
            result = session.engine.explain(block_id)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "steps": list(result.steps),
            "spanMap": [list(map(list, pair)) for pair in result.span_map],
            "unmapped": list(result.unmapped),
        }

    async def route(messages) -> None:
        for target, frame in messages:
            ws = sockets.get((frame.doc_id, target))
            if ws is None:
                continue
            try:
                await ws.send_text(frame.encode())
            except Exception:
                pass

    @app.websocket("/ws")
    async def channel(websocket: WebSocket):
        await websocket.accept()
        doc_id = actor = None
        try:
            hello = Frame.decode(await websocket.receive_text())
            if hello.type != HELLO or not hello.actor:
                await websocket.close(code=4000, reason="expected hello")
                return
            doc_id, actor = hello.doc_id, hello.actor
            session = hub.create_document(doc_id)
            sockets[(doc_id, actor)] = websocket
            async with lock_for(doc_id):
                await route(session.handle_frame(actor, hello))
            while True:
                text = await websocket.receive_text()
                try:
                    frame = Frame.decode(text)
                except ProtocolError as exc:
                    await websocket.send_text(
                        Frame("error", doc_id, {"error": str(exc)}).encode()
                    )
                    continue
                async with lock_for(doc_id):
                    await route(session.handle_frame(actor, frame))
        except WebSocketDisconnect:
            pass
        finally:
            if doc_id is not None and actor is not None:
                sockets.pop((doc_id, actor), None)
                try:
                    hub.get(doc_id).handle_disconnect(actor)
                except UnknownDocument:
                    pass

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
