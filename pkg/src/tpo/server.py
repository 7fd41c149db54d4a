"""Live session server: JSON-lines over TCP plus a WebSocket bridge.

Both transports carry identical frames.  All state lives on one asyncio
loop; the control tick is a synchronous call, so readers and the ticker
never race.  Outbound queues are bounded and drop the oldest telemetry
when a client falls behind; inbound frames are never dropped.
"""

from __future__ import annotations

import asyncio
import contextlib
import sys
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse

from tpo import protocol
from tpo.config import ConfigBundle
from tpo.defs import Role
from tpo.scenario import BoxShape, Sphere
from tpo.session import Session, TrialLog

_OUTBOUND_LIMIT = 512


def scene_info(bundle: ConfigBundle) -> protocol.SceneInfo:
    objects = []
    for obj in bundle.scenario.objects:
        if isinstance(obj.shape, Sphere):
            shape, size = "sphere", (obj.shape.radius,)
        else:
            assert isinstance(obj.shape, BoxShape)
            shape, size = "box", tuple(float(v) for v in obj.shape.half_extents)
        objects.append(protocol.SceneObject(
            id=obj.id, role=obj.role.value, shape=shape, size=size,
            position=tuple(float(v) for v in obj.position),
            heading=obj.heading,
        ))
    return protocol.SceneInfo(
        condition=bundle.condition.value,
        objects=tuple(objects),
        footprint_radius=bundle.robot.footprint_radius,
        ee_radius=bundle.scenario.geometry.ee_radius,
        f_max=bundle.profile.f_max,
    )


@dataclass(eq=False)
class _Client:
    role: Role
    queue: deque = field(default_factory=lambda: deque(maxlen=_OUTBOUND_LIMIT))
    wakeup: asyncio.Event = field(default_factory=asyncio.Event)
    closed: bool = False

    def push(self, data: bytes) -> None:
        if not self.closed:
            self.queue.append(data)
            self.wakeup.set()


class SessionHub:
    """One live session and the set of connected clients."""

    def __init__(self, bundle: ConfigBundle, log: TrialLog | None = None):
        self.bundle = bundle
        self.session = Session(bundle, log)
        self.clients: set[_Client] = set()
        self._scene = protocol.encode_message(scene_info(bundle))
        self._ticker: asyncio.Task | None = None

    # -- client lifecycle ---------------------------------------------------

    @property
    def operator_connected(self) -> bool:
        return any(c.role is Role.OPERATOR and not c.closed for c in self.clients)

    def admit(self, hello: protocol.Handshake) -> tuple[protocol.HandshakeReply, _Client | None]:
        reply = protocol.evaluate_handshake(hello, self.operator_connected)
        if not reply.accepted:
            return reply, None
        client = _Client(role=Role(hello.role))
        self.clients.add(client)
        client.push(protocol.encode_message(reply))
        client.push(self._scene)
        return reply, client

    def drop(self, client: _Client) -> None:
        client.closed = True
        client.wakeup.set()
        self.clients.discard(client)

    def handle_frame(self, client: _Client, raw: bytes | str) -> None:
        """Decode and route one inbound frame; bad frames are logged, not fatal."""
        try:
            msg = protocol.decode_message(raw)
        except protocol.ProtocolError as exc:
            print(f"dropping bad frame from {client.role.value}: {exc}",
                  file=sys.stderr)
            return
        if client.role is Role.UI_VIEWER:
            return
        if isinstance(msg, protocol.OperatorInput):
            if client.role is Role.OPERATOR:
                self.session.submit(msg)
        elif isinstance(msg, protocol.ExternalCommand):
            self.session.submit(msg)

    # -- ticking ------------------------------------------------------------

    def broadcast(self, frames) -> None:
        if not frames or not self.clients:
            return
        encoded = [protocol.encode_message(f) for f in frames]
        for client in list(self.clients):
            for data in encoded:
                client.push(data)

    async def run_ticks(self) -> None:
        loop = asyncio.get_running_loop()
        dt = self.bundle.profile.dt
        start = loop.time()
        i = 0
        while True:
            delay = start + (i + 1) * dt - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            self.broadcast(self.session.tick())
            i += 1

    def start(self) -> None:
        self._ticker = asyncio.create_task(self.run_ticks())

    async def stop(self) -> None:
        if self._ticker is not None:
            self._ticker.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._ticker
            self._ticker = None


async def _await_handshake(read_frame) -> protocol.Handshake | None:
    raw = await read_frame()
    if raw is None:
        return None
    try:
        msg = protocol.decode_message(raw)
    except protocol.ProtocolError:
        return None
    return msg if isinstance(msg, protocol.Handshake) else None


async def handle_tcp(hub: SessionHub, reader: asyncio.StreamReader,
                     writer: asyncio.StreamWriter) -> None:
    async def read_frame():
        line = await reader.readline()
        return line if line else None

    client = None
    try:
        hello = await _await_handshake(read_frame)
        if hello is None:
            writer.close()
            return
        reply, client = hub.admit(hello)
        if client is None:
            writer.write(protocol.encode_message(reply))
            await writer.drain()
            writer.close()
            return

        async def pump_out():
            while not client.closed:
                while client.queue:
                    writer.write(client.queue.popleft())
                await writer.drain()
                client.wakeup.clear()
                if not client.queue:
                    await client.wakeup.wait()

        out_task = asyncio.create_task(pump_out())
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                hub.handle_frame(client, line)
        finally:
            out_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await out_task
    except (ConnectionError, asyncio.IncompleteReadError):
        pass
    finally:
        if client is not None:
            hub.drop(client)
        with contextlib.suppress(Exception):
            writer.close()


def build_app(hub: SessionHub, static_dir: str | Path | None = None) -> FastAPI:
    """FastAPI app exposing /ws plus the bundled browser console, if built."""
    app = FastAPI(title="teleop session bridge")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        client = None
        try:
            hello_raw = await ws.receive_text()
            try:
                hello = protocol.decode_message(hello_raw)
            except protocol.ProtocolError:
                await ws.close(code=1002)
                return
            if not isinstance(hello, protocol.Handshake):
                await ws.close(code=1002)
                return
            reply, client = hub.admit(hello)
            if client is None:
                await ws.send_text(protocol.encode_message(reply).decode().strip())
                await ws.close(code=1008)
                return

            async def pump_out():
                while not client.closed:
                    while client.queue:
                        data = client.queue.popleft()
                        await ws.send_text(data.decode().strip())
                    client.wakeup.clear()
                    if not client.queue:
                        await client.wakeup.wait()

            out_task = asyncio.create_task(pump_out())
            try:
                while True:
                    raw = await ws.receive_text()
                    hub.handle_frame(client, raw)
            finally:
                out_task.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await out_task
        except WebSocketDisconnect:
            pass
        finally:
            if client is not None:
                hub.drop(client)

    static = Path(static_dir) if static_dir is not None else None
    if static is not None and static.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static), html=True), name="ui")
    else:
        @app.get("/")
        def index() -> PlainTextResponse:
            return PlainTextResponse(
                "teleop session bridge: connect a console to /ws\n"
            )

    return app


def default_static_dir() -> Path | None:
    """The browser console build output, when it exists next to the repo."""
    for base in (Path.cwd(), Path(__file__).resolve().parents[2]):
        cand = base / "frontend" / "dist"
        if cand.is_dir():
            return cand
    return None


async def serve(
    bundle: ConfigBundle,
    tcp_port: int | None = None,
    http_port: int | None = None,
    out_path: str | Path | None = None,
    static_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> None:
    """Run the live server until cancelled; logs the trial if out_path given."""
    import uvicorn

    log = TrialLog(bundle.snapshot()) if out_path is not None else None
    hub = SessionHub(bundle, log)
    tcp_port = bundle.tcp_port if tcp_port is None else tcp_port
    http_port = bundle.http_port if http_port is None else http_port

    tcp_server = await asyncio.start_server(
        lambda r, w: handle_tcp(hub, r, w), host, tcp_port
    )
    actual_tcp = tcp_server.sockets[0].getsockname()[1]

    app = build_app(hub, static_dir if static_dir is not None
                    else default_static_dir())
    config = uvicorn.Config(app, host=host, port=http_port, log_level="warning")
    server = uvicorn.Server(config)

    hub.start()
    print(f"listening tcp={actual_tcp} http={http_port} "
          f"condition={bundle.condition.value}", flush=True)
    try:
        await server.serve()
    finally:
        await hub.stop()
        tcp_server.close()
        await tcp_server.wait_closed()
        if log is not None and out_path is not None:
            log.write(out_path)
