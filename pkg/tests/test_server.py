"""Transport layer: TCP framing, WebSocket bridge, client bookkeeping."""

import asyncio
import time

import pytest
from starlette.testclient import TestClient

from tpo.config import load_bundle
from tpo.protocol import (
    PROTOCOL_VERSION,
    ExternalCommand,
    Handshake,
    HandshakeReply,
    OperatorInput,
    RobotState,
    SceneInfo,
    decode_message,
    encode_message,
)
from tpo.server import SessionHub, _Client, build_app, handle_tcp, scene_info
from tpo.defs import Role


def hub_():
    return SessionHub(load_bundle())


def hello(role="operator", version=PROTOCOL_VERSION):
    return Handshake(version, role)


def operator_input(t=0.0):
    return OperatorInput(t=t, right_wrist=(0.05, 0, 0), left_wrist=(0, 0, 0))


# --- scene description -------------------------------------------------------


def test_scene_info_describes_the_world():
    info = scene_info(load_bundle())
    assert isinstance(info, SceneInfo)
    assert info.condition == "C"
    assert len(info.objects) == 6
    roles = {o.role for o in info.objects}
    assert "Bottle" in roles and "EmergencyButton" in roles
    assert info.f_max == 20.0


# --- hub admission -----------------------------------------------------------


def test_admit_pushes_reply_then_scene():
    hub = hub_()
    reply, client = hub.admit(hello())
    assert reply.accepted
    assert client is not None
    first = decode_message(client.queue.popleft())
    second = decode_message(client.queue.popleft())
    assert isinstance(first, HandshakeReply) and first.accepted
    assert isinstance(second, SceneInfo)


def test_admit_rejects_second_operator_until_drop():
    hub = hub_()
    _, first = hub.admit(hello())
    reply, second = hub.admit(hello())
    assert not reply.accepted and second is None
    _, viewer = hub.admit(hello("ui-viewer"))
    assert viewer is not None
    hub.drop(first)
    reply, third = hub.admit(hello())
    assert reply.accepted and third is not None


def test_admit_rejects_version_mismatch():
    hub = hub_()
    reply, client = hub.admit(hello(version=PROTOCOL_VERSION + 3))
    assert not reply.accepted and client is None
    assert "version" in reply.reason


def test_operator_input_only_accepted_from_operator():
    hub = hub_()
    _, operator = hub.admit(hello())
    _, viewer = hub.admit(hello("ui-viewer"))
    _, channel = hub.admit(hello("command-channel"))

    hub.handle_frame(viewer, encode_message(operator_input()))
    assert len(hub.session._pending) == 0
    hub.handle_frame(channel, encode_message(operator_input()))
    assert len(hub.session._pending) == 0
    hub.handle_frame(operator, encode_message(operator_input()))
    assert len(hub.session._pending) == 1
    hub.handle_frame(channel, encode_message(ExternalCommand(t=0.0, token="RIGHT")))
    assert len(hub.session._pending) == 2


def test_bad_frames_are_dropped_not_fatal(capsys):
    hub = hub_()
    _, operator = hub.admit(hello())
    hub.handle_frame(operator, b"not json at all\n")
    hub.handle_frame(operator, b'{"type":"nope"}\n')
    assert len(hub.session._pending) == 0
    err = capsys.readouterr().err
    assert "dropping bad frame" in err


def test_outbound_queue_drops_oldest_telemetry():
    client = _Client(role=Role.UI_VIEWER)
    for i in range(600):
        client.push(f"frame-{i}\n".encode())
    assert len(client.queue) == 512
    assert client.queue[0] == b"frame-88\n"  # oldest 88 were dropped
    assert client.queue[-1] == b"frame-599\n"


def test_broadcast_reaches_every_client():
    hub = hub_()
    _, a = hub.admit(hello())
    _, b = hub.admit(hello("ui-viewer"))
    a.queue.clear(), b.queue.clear()
    hub.broadcast(hub.session.tick(force_emit=True))
    assert len(a.queue) == len(b.queue) > 0


# --- TCP transport -----------------------------------------------------------


async def _start_tcp(hub):
    server = await asyncio.start_server(
        lambda r, w: handle_tcp(hub, r, w), "127.0.0.1", 0
    )
    return server, server.sockets[0].getsockname()[1]


async def _connect(port, role):
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    writer.write(encode_message(hello(role)))
    await writer.drain()
    reply = decode_message(await asyncio.wait_for(reader.readline(), 5))
    return reader, writer, reply


def test_tcp_handshake_scene_and_telemetry():
    async def scenario():
        hub = hub_()
        server, port = await _start_tcp(hub)
        try:
            op_r, op_w, op_reply = await _connect(port, "operator")
            assert op_reply.accepted
            scene = decode_message(await asyncio.wait_for(op_r.readline(), 5))
            assert isinstance(scene, SceneInfo)

            dup_r, dup_w, dup_reply = await _connect(port, "operator")
            assert not dup_reply.accepted

            view_r, view_w, view_reply = await _connect(port, "ui-viewer")
            assert view_reply.accepted
            await asyncio.wait_for(view_r.readline(), 5)  # its scene frame

            op_w.write(encode_message(operator_input()))
            await op_w.drain()
            for _ in range(50):
                if hub.session._pending:
                    break
                await asyncio.sleep(0.01)
            assert hub.session._pending

            hub.broadcast(hub.session.tick(force_emit=True))
            for reader in (op_r, view_r):
                frame = decode_message(await asyncio.wait_for(reader.readline(), 5))
                assert isinstance(frame, RobotState)

            for w in (op_w, dup_w, view_w):
                w.close()
        finally:
            server.close()
            await server.wait_closed()

    asyncio.run(scenario())


def test_tcp_paced_ticker_advances_session():
    async def scenario():
        hub = hub_()
        hub.start()
        t0 = time.perf_counter()
        while hub.session.tick_index < 3 and time.perf_counter() - t0 < 5.0:
            await asyncio.sleep(0.01)
        await hub.stop()
        assert hub.session.tick_index >= 3

    asyncio.run(scenario())


def test_tcp_garbage_before_handshake_closes_connection():
    async def scenario():
        hub = hub_()
        server, port = await _start_tcp(hub)
        try:
            reader, writer = await asyncio.open_connection("127.0.0.1", port)
            writer.write(b"garbage\n")
            await writer.drain()
            line = await asyncio.wait_for(reader.readline(), 5)
            assert line == b""  # server hung up without a reply
            writer.close()
        finally:
            server.close()
            await server.wait_closed()

    asyncio.run(scenario())


# --- WebSocket bridge --------------------------------------------------------


def test_websocket_carries_identical_frames():
    hub = hub_()
    app = build_app(hub)
    with TestClient(app) as tc:
        with tc.websocket_connect("/ws") as ws:
            ws.send_text(encode_message(hello()).decode())
            reply = decode_message(ws.receive_text())
            assert isinstance(reply, HandshakeReply) and reply.accepted
            scene = decode_message(ws.receive_text())
            assert isinstance(scene, SceneInfo)
            assert scene == scene_info(hub.bundle)

            ws.send_text(encode_message(operator_input()).decode())
            deadline = time.perf_counter() + 5.0
            while not hub.session._pending and time.perf_counter() < deadline:
                time.sleep(0.01)
            assert hub.session._pending


def test_websocket_rejects_second_operator():
    hub = hub_()
    app = build_app(hub)
    with TestClient(app) as tc:
        with tc.websocket_connect("/ws") as first:
            first.send_text(encode_message(hello()).decode())
            assert decode_message(first.receive_text()).accepted
            first.receive_text()  # scene
            with tc.websocket_connect("/ws") as second:
                second.send_text(encode_message(hello()).decode())
                reply = decode_message(second.receive_text())
                assert not reply.accepted


def test_http_root_serves_placeholder_without_ui_build(tmp_path):
    app = build_app(hub_(), static_dir=tmp_path / "missing")
    with TestClient(app) as tc:
        body = tc.get("/")
        assert body.status_code == 200
        assert "connect a console" in body.text


def test_http_serves_static_ui_when_present(tmp_path):
    static = tmp_path / "dist"
    static.mkdir()
    (static / "index.html").write_text("<html><body>console</body></html>")
    app = build_app(hub_(), static_dir=static)
    with TestClient(app) as tc:
        body = tc.get("/")
        assert body.status_code == 200
        assert "console" in body.text
