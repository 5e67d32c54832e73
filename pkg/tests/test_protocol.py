import json
import struct
import threading

import numpy as np
import pytest

from vault.app import Application
from vault.core.payloads import PointPayload
from vault.service.protocol import FRAME_HEADER, ProtocolServer, ServiceConfig
from vault.errors import ValidationError

from conftest import points


class FakeConn:
    def __init__(self):
        self._lock = threading.Lock()
        self.texts = []
        self.binaries = []

    def send_text(self, text):
        with self._lock:
            self.texts.append(json.loads(text))

    def send_bytes(self, blob):
        with self._lock:
            self.binaries.append(blob)

    def of_type(self, kind):
        with self._lock:
            return [m for m in self.texts if m["type"] == kind]


@pytest.fixture
def app(tmp_path):
    return Application(preset_dir=tmp_path / "presets")


@pytest.fixture
def server(app):
    return ProtocolServer(app, ServiceConfig())


def connect(server):
    conn = FakeConn()
    server.attach(conn)
    return conn


def request(server, conn, rid, kind, **payload):
    server.handle_text(conn, json.dumps(
        {"type": kind, "requestId": rid, "payload": payload}))
    terminal = [m for m in conn.texts
                if m.get("requestId") == rid and m["type"] in ("response", "error")]
    assert len(terminal) == 1, f"expected one terminal for {rid}, got {terminal}"
    return terminal[0]


class TestHandshakeAndFanout:
    def test_hello_is_hierarchy_first(self, app, server):
        app.submit(app.data.add_dataset, points(4, 2), "toy")
        conn = connect(server)
        assert conn.texts[0]["type"] == "hierarchy"
        assert conn.texts[0]["payload"]["nodes"][0]["name"] == "toy"

    def test_selection_event_reaches_all_clients(self, app, server):
        dataset = app.submit(app.data.add_dataset, points(6, 2), "toy")
        clients = [connect(server) for _ in range(3)]
        request(server, clients[0], 1, "selection.set", dataset=dataset, indices=[1, 2])
        for conn in clients:
            events = conn.of_type("event")
            assert any(e["payload"]["kind"] == "DatasetSelectionChanged" and
                       e["payload"]["dataset"] == dataset for e in events)

    def test_detached_client_receives_nothing(self, app, server):
        dataset = app.submit(app.data.add_dataset, points(6, 2), "toy")
        conn = connect(server)
        server.detach(conn)
        before = len(conn.texts)
        app.submit(app.data.set_selection, dataset, [0])
        assert len(conn.texts) == before


class TestRequestResponse:
    def test_exactly_one_terminal_per_request(self, app, server):
        dataset = app.submit(app.data.add_dataset, points(10, 2), "toy")
        conn = connect(server)
        done = []

        def worker(base):
            for i in range(10):
                rid = base * 100 + i
                kind = ("hierarchy.list", "selection.get")[i % 2]
                payload = {} if kind == "hierarchy.list" else {"dataset": dataset}
                server.handle_text(conn, json.dumps(
                    {"type": kind, "requestId": rid, "payload": payload}))
                done.append(rid)

        threads = [threading.Thread(target=worker, args=(t,)) for t in range(10)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(done) == 100
        for rid in done:
            terminal = [m for m in conn.texts if m.get("requestId") == rid]
            assert len(terminal) == 1 and terminal[0]["type"] == "response"

    def test_unknown_type_is_error_with_same_id(self, app, server):
        conn = connect(server)
        reply = request(server, conn, 7, "bogus.kind")
        assert reply["type"] == "error"

    def test_unknown_dataset_is_error(self, app, server):
        conn = connect(server)
        reply = request(server, conn, 8, "selection.get", dataset="nope")
        assert reply["type"] == "error" and "nope" in reply["payload"]["message"]

    def test_locked_layout_set_is_error(self, app, server):
        conn = connect(server)
        app.locked = True
        reply = request(server, conn, 9, "layout.set", layout={"type": "tabs", "instances": []})
        assert reply["type"] == "error" and "locked" in reply["payload"]["message"]


class TestDataFetch:
    def test_chunk_arithmetic_392960x2(self, app, server):
        payload = PointPayload(np.zeros((392960, 2), dtype=np.float32), ["x", "y"])
        dataset = app.submit(app.data.add_dataset, payload, "embedding")
        conn = connect(server)
        reply = request(server, conn, 1, "data.fetch", dataset=dataset)
        assert reply["payload"]["chunks"] == 3  # ceil(392960*2*4 / 2^20)
        assert len(conn.binaries) == 3

    def test_chunks_reassemble_in_any_order(self, app, server):
        rng = np.random.default_rng(61)
        values = rng.normal(size=(70000, 2)).astype(np.float32)
        dataset = app.submit(app.data.add_dataset, PointPayload(values), "big")
        conn = connect(server)
        reply = request(server, conn, 2, "data.fetch", dataset=dataset)
        channel = reply["payload"]["channelId"]
        pieces = {}
        seen_last = False
        for blob in conn.binaries:
            chan, index, flags = FRAME_HEADER.unpack_from(blob, 0)
            assert chan == channel
            pieces[index] = blob[FRAME_HEADER.size:]
            seen_last |= bool(flags & 1)
        assert seen_last
        joined = b"".join(pieces[i] for i in sorted(pieces))
        back = np.frombuffer(joined, dtype="<f4").reshape(70000, 2)
        np.testing.assert_array_equal(back, values)

    def test_dims_items_and_dimension_order(self, app, server):
        values = np.arange(12, dtype=np.float32).reshape(4, 3)
        dataset = app.submit(app.data.add_dataset,
                             PointPayload(values, ["a", "b", "c"]), "m")
        conn = connect(server)
        reply = request(server, conn, 3, "data.fetch", dataset=dataset,
                        dims=[0, 2], items=[1, 3], order="dimension")
        assert reply["payload"]["dimNames"] == ["a", "c"]
        blob = conn.binaries[0][FRAME_HEADER.size:]
        back = np.frombuffer(blob, dtype="<f4")
        # dimension-major: all of dim a, then all of dim c, items 1 and 3
        np.testing.assert_array_equal(back, [3.0, 9.0, 5.0, 11.0])

    def test_min_chunk_size_enforced(self):
        with pytest.raises(ValidationError):
            ServiceConfig(max_chunk_bytes=1024)


class TestPluginAndActionMessages:
    def test_list_instantiate_control(self, app, server):
        dataset = app.submit(app.data.add_dataset, points(20, 4), "pts")
        conn = connect(server)
        reply = request(server, conn, 1, "plugin.list", dataset=dataset)
        ids = [p["pluginId"] for p in reply["payload"]["plugins"]]
        assert "org.vault.pca" in ids
        reply = request(server, conn, 2, "plugin.instantiate",
                        pluginId="org.vault.pca", inputs=["pts"])
        instance_id = reply["payload"]["instanceId"]
        assert reply["payload"]["outputGuid"]
        reply = request(server, conn, 3, "plugin.control",
                        instanceId=instance_id, command="start")
        assert reply["payload"]["state"] in ("Running", "Finished")
        app.registry.wait(instance_id, timeout=30)

    def test_action_set_and_push(self, app, server):
        dataset = app.submit(app.data.add_dataset, points(20, 4), "pts")
        conn = connect(server)
        reply = request(server, conn, 1, "plugin.instantiate",
                        pluginId="org.vault.meanshift", inputs=[dataset])
        instance_id = reply["payload"]["instanceId"]
        reply = request(server, conn, 2, "action.list", instance=instance_id)
        tree = reply["payload"]["actions"][0]["action"]
        sigma = next(c for c in tree["children"] if c["name"] == "sigma")
        request(server, conn, 3, "action.set", action=sigma["id"], value=0.42)
        pushes = conn.of_type("actionChanged")
        assert any(p["payload"].get("action") == sigma["id"] and
                   p["payload"]["value"]["value"] == 0.42 for p in pushes)

    def test_publish_connect_via_wire(self, app, server):
        dataset = app.submit(app.data.add_dataset, points(20, 4), "pts")
        conn = connect(server)
        a = request(server, conn, 1, "plugin.instantiate",
                    pluginId="org.vault.scatterplot", inputs=[dataset])
        b = request(server, conn, 2, "plugin.instantiate",
                    pluginId="org.vault.scatterplot", inputs=[dataset])
        trees = {}
        for rid, reply in ((3, a), (4, b)):
            listing = request(server, conn, rid, "action.list",
                              instance=reply["payload"]["instanceId"])
            trees[rid] = listing["payload"]["actions"][0]["action"]
        sigma_a = next(c for c in trees[3]["children"] if c["name"] == "sigma")["id"]
        sigma_b = next(c for c in trees[4]["children"] if c["name"] == "sigma")["id"]
        request(server, conn, 5, "action.publish", action=sigma_a, publicName="sigma")
        request(server, conn, 6, "action.connect", action=sigma_b, publicName="sigma")
        request(server, conn, 7, "action.set", action=sigma_a, value=0.33)
        assert app.actions.value_of(sigma_b) == pytest.approx(0.33)
        pool = request(server, conn, 8, "action.pool")
        assert pool["payload"]["entries"][0]["publicName"] == "sigma"
