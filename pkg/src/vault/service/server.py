"""WebSocket + static-file transport over the protocol server.

One WebSocket endpoint (``/ws``) carries all requests and pushes; the
frontend bundle, when configured, is served from ``/``. Each connection
owns a bounded outbound queue (1024 messages); a client too slow to drain
it is disconnected rather than allowed to stall the core.
"""

from __future__ import annotations

import asyncio
import logging
import queue

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from vault.service.protocol import ProtocolServer, ServiceConfig

logger = logging.getLogger(__name__)

OUTBOUND_QUEUE_LIMIT = 1024
_CLOSE = object()


class QueueConnection:
    """Thread-safe outbound buffer between core threads and the socket task."""

    def __init__(self, limit: int = OUTBOUND_QUEUE_LIMIT):
        self.queue: queue.Queue = queue.Queue(maxsize=limit)
        self.overflowed = False

    def _put(self, item) -> None:
        if self.overflowed:
            return
        try:
            self.queue.put_nowait(item)
        except queue.Full:
            # Slow client: drop the connection instead of blocking the core.
            self.overflowed = True
            try:
                self.queue.put_nowait(_CLOSE)
            except queue.Full:
                pass

    def send_text(self, text: str) -> None:
        self._put(("text", text))

    def send_bytes(self, blob: bytes) -> None:
        self._put(("bytes", blob))

    def close(self) -> None:
        self.queue.put(_CLOSE)


def build_asgi_app(app, config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    server = ProtocolServer(app, config)
    api = FastAPI(title="vault session service")
    api.state.protocol = server

    @api.websocket("/ws")
    async def websocket_endpoint(websocket: WebSocket):
        await websocket.accept()
        conn = QueueConnection()
        server.attach(conn)
        sender = asyncio.create_task(_drain(websocket, conn))
        try:
            while True:
                text = await websocket.receive_text()
                await run_in_threadpool(server.handle_text, conn, text)
        except WebSocketDisconnect:
            pass
        finally:
            server.detach(conn)
            conn.close()
            try:
                await sender
            except Exception:
                pass

    if config.static_dir is not None:
        api.mount("/", StaticFiles(directory=str(config.static_dir), html=True),
                  name="frontend")
    return api


async def _drain(websocket: WebSocket, conn: QueueConnection) -> None:
    while True:
        item = await asyncio.to_thread(conn.queue.get)
        if item is _CLOSE:
            if conn.overflowed:
                try:
                    await websocket.close(code=1013)  # try again later
                except Exception:
                    pass
            return
        kind, body = item
        try:
            if kind == "text":
                await websocket.send_text(body)
            else:
                await websocket.send_bytes(body)
        except Exception:
            return


def serve(app, config: ServiceConfig | None = None) -> None:
    """Blocking run loop (uvicorn) on the configured address and port."""
    import uvicorn

    config = config or ServiceConfig()
    uvicorn.run(build_asgi_app(app, config), host=config.bind_address,
                port=config.port, log_level="info")
