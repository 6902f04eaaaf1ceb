"""Network boundary: WebSocket session channel plus read-only HTTP endpoints.

Messages are processed strictly in arrival order per connection, and the
runtime serializes handling across connections; every inbound message is
durable in the event log before its responses are sent (see runtime).
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..errors import ValidationError
from .runtime import StudyRuntime
from .storage import read_study_config

logger = logging.getLogger(__name__)


def create_app(runtime: StudyRuntime) -> FastAPI:
    app = FastAPI(title="lifecycle-lab", docs_url=None, redoc_url=None)
    app.state.runtime = runtime

    @app.get("/health")
    def health():
        return {"status": "ok", "study_id": runtime.config.study_id}

    @app.get("/sessions")
    def sessions():
        out = []
        for s in sorted(runtime.study.sessions.values(),
                        key=lambda s: s.participant_id):
            out.append({
                "session_id": s.session_id,
                "participant_id": s.participant_id,
                "phase": s.phase,
                "round": s.current_round,
                "period": s.current_period,
                "payment_total": s.payment_total,
            })
        return {"study_id": runtime.config.study_id, "sessions": out}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        try:
            while True:
                text = await websocket.receive_text()
                for reply in runtime.handle_text(text):
                    await websocket.send_text(reply)
        except WebSocketDisconnect:
            pass

    return app


def build_runtime(config_path: Path | str, root: Path | str | None = None) -> StudyRuntime:
    """Load a study config and recover any logged state under its directory."""
    config_path = Path(config_path)
    config = read_study_config(config_path)
    study_root = Path(root) if root is not None else config_path.parent
    if (study_root / "logs").exists():
        logger.info("recovering study %s from event logs", config.study_id)
        return StudyRuntime.recover(config, study_root)
    return StudyRuntime(config, study_root)


def serve(config_path: Path | str, bind: str = "127.0.0.1:8000") -> None:
    """Run the service until interrupted (logs flush on every append)."""
    import uvicorn

    host, _, port_str = bind.rpartition(":")
    if not host or not port_str.isdigit():
        raise ValidationError(f"bind address must be host:port, got {bind!r}")
    runtime = build_runtime(config_path)
    app = create_app(runtime)
    uvicorn.run(app, host=host, port=int(port_str), log_level="info")
