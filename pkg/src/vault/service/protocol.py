"""The wire protocol, independent of any transport.

Text frames are JSON objects ``{"type", "requestId"?, "payload"}``. Every
request carrying a ``requestId`` receives exactly one terminal message
with the same id: either ``{"type": "response", ...}`` or ``{"type":
"error", ...}``. Server pushes carry no ``requestId``: ``hierarchy`` (sent
once on attach), ``event`` (core event fan-out), and ``actionChanged``
(parameter synchronization fan-out).

Bulk data travels in binary frames: a 16-byte header of ``channelId
(u64 LE) | chunkIndex (u32 LE) | flags (u32 LE)`` followed by f32 LE
values; flag bit 0 marks the final chunk of a channel. A ``data.fetch``
response announces the channel id and chunk count; chunks may be
reassembled in any order using ``chunkIndex``.

The full message vocabulary is documented in ``docs/protocol.md``.
"""

from __future__ import annotations

import itertools
import json
import logging
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from vault.errors import ValidationError, VaultError

logger = logging.getLogger(__name__)

DEFAULT_PORT = 9743
MIN_CHUNK_BYTES = 64 * 1024
FRAME_HEADER = struct.Struct("<QII")
FLAG_LAST_CHUNK = 1


@dataclass
class ServiceConfig:
    bind_address: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    static_dir: Optional[Path] = None
    max_chunk_bytes: int = 1024 * 1024

    def __post_init__(self):
        if self.max_chunk_bytes < MIN_CHUNK_BYTES:
            raise ValidationError(
                f"max_chunk_bytes must be >= {MIN_CHUNK_BYTES}, got {self.max_chunk_bytes}")


class ProtocolServer:
    """Dispatches protocol messages against the application facade.

    Transports hand each connection object in via :meth:`attach` (it must
    expose thread-safe ``send_text(str)`` and ``send_bytes(bytes)``) and
    route inbound text frames to :meth:`handle_text`, which may be called
    from any thread.
    """

    def __init__(self, app, config: Optional[ServiceConfig] = None):
        self.app = app
        self.config = config or ServiceConfig()
        self._connections: list = []
        self._conn_lock = threading.Lock()
        self._channels = itertools.count(1)
        self._bus_subscription = app.bus.subscribe(self._on_core_event)
        app.actions.add_observer(self._on_action_change)
        self._handlers = {
            "hierarchy.list": self._hierarchy_list,
            "data.fetch": None,  # special-cased: needs the connection
            "data.kde": self._data_kde,
            "selection.set": self._selection_set,
            "selection.get": self._selection_get,
            "dataset.group": self._dataset_group,
            "action.list": self._action_list,
            "action.set": self._action_set,
            "action.fire": self._action_fire,
            "action.publish": self._action_publish,
            "action.connect": self._action_connect,
            "action.disconnect": self._action_disconnect,
            "action.pool": self._action_pool,
            "plugin.list": self._plugin_list,
            "plugin.instances": self._plugin_instances,
            "plugin.instantiate": self._plugin_instantiate,
            "plugin.control": self._plugin_control,
            "plugin.destroy": self._plugin_destroy,
            "view.bind": self._view_bind,
            "project.save": self._project_save,
            "project.load": self._project_load,
            "workspace.save": self._workspace_save,
            "workspace.load": self._workspace_load,
            "preset.save": self._preset_save,
            "preset.apply": self._preset_apply,
            "layout.get": self._layout_get,
            "layout.set": self._layout_set,
        }

    # -- connection fan-out ------------------------------------------------

    def attach(self, conn) -> None:
        """Send the hello snapshot, then include the connection in fan-out."""
        conn.send_text(json.dumps(
            {"type": "hierarchy", "payload": {"nodes": self.app.hierarchy_snapshot()}}))
        with self._conn_lock:
            self._connections.append(conn)

    def detach(self, conn) -> None:
        with self._conn_lock:
            if conn in self._connections:
                self._connections.remove(conn)

    def connection_count(self) -> int:
        with self._conn_lock:
            return len(self._connections)

    def _broadcast(self, message: dict) -> None:
        text = json.dumps(message)
        with self._conn_lock:
            targets = list(self._connections)
        for conn in targets:
            try:
                conn.send_text(text)
            except Exception:
                logger.exception("push failed; detaching connection")
                self.detach(conn)

    def _on_core_event(self, event) -> None:
        self._broadcast({"type": "event", "payload": {
            "kind": event.kind.value, "dataset": event.dataset, "seq": event.seq}})

    def _on_action_change(self, change) -> None:
        if change.scope == "action":
            action = self.app.actions.action(change.target)
            payload = {"action": change.target, "name": action.name,
                       "value": action.payload.to_json()}
            self._broadcast({"type": "actionChanged", "payload": payload})
        elif change.scope == "trigger":
            self._broadcast({"type": "actionChanged",
                             "payload": {"action": change.target, "fired": True}})

    # -- request dispatch ----------------------------------------------------

    def handle_text(self, conn, text: str) -> None:
        request_id = None
        try:
            message = json.loads(text)
            request_id = message.get("requestId")
            kind = message.get("type")
            payload = message.get("payload") or {}
            if kind == "data.fetch":
                # Sends its own response (channel announcement), then chunks.
                self._data_fetch(conn, payload, request_id)
                return
            if kind in self._handlers:
                result = self._handlers[kind](payload)
            else:
                raise ValidationError(f"unknown message type {kind!r}")
        except VaultError as exc:
            self._send_error(conn, request_id, str(exc))
            return
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            self._send_error(conn, request_id, f"malformed request: {exc}")
            return
        except Exception as exc:  # never leave a request unanswered
            logger.exception("handler failed")
            self._send_error(conn, request_id, f"internal error: {exc}")
            return
        if request_id is not None:
            conn.send_text(json.dumps(
                {"type": "response", "requestId": request_id, "payload": result}))

    def _send_error(self, conn, request_id, message: str) -> None:
        frame = {"type": "error", "payload": {"message": message}}
        if request_id is not None:
            frame["requestId"] = request_id
        try:
            conn.send_text(json.dumps(frame))
        except Exception:
            logger.exception("error frame send failed")

    # -- handlers --------------------------------------------------------------

    def _hierarchy_list(self, payload) -> dict:
        return {"nodes": self.app.hierarchy_snapshot()}

    def _data_fetch(self, conn, payload, request_id) -> None:
        dataset = self.app.resolve_dataset(payload["dataset"])
        order = payload.get("order", "item")
        if order not in ("item", "dimension"):
            raise ValidationError(f"unknown order {order!r}")
        view = self.app.submit(self.app.data.get_data_view, dataset,
                               payload.get("dims"), payload.get("items"))
        matrix = view if order == "item" else np.ascontiguousarray(view.T)
        blob = matrix.astype("<f4", copy=False).tobytes()
        values_per_chunk = self.config.max_chunk_bytes // 4
        total = matrix.size
        chunks = max(1, -(-total // values_per_chunk))
        channel = next(self._channels)
        all_names = self.app.submit(self.app.data.dim_names, dataset)
        dims = payload.get("dims")
        response = {
            "channelId": channel,
            "chunks": chunks,
            "numItems": int(view.shape[0]),
            "numDims": int(view.shape[1]),
            "order": order,
            "dimNames": [all_names[int(i)] for i in dims] if dims else all_names,
        }
        if request_id is not None:
            conn.send_text(json.dumps(
                {"type": "response", "requestId": request_id, "payload": response}))
        step = values_per_chunk * 4
        for index in range(chunks):
            piece = blob[index * step:(index + 1) * step]
            flags = FLAG_LAST_CHUNK if index == chunks - 1 else 0
            conn.send_bytes(FRAME_HEADER.pack(channel, index, flags) + piece)

    def _data_kde(self, payload) -> dict:
        """Density grid of a 2-D dataset: one server-side KDE for all views."""
        grid = self.app.density_grid(payload["dataset"], float(payload["sigma"]),
                                     int(payload.get("resolution", 256)),
                                     payload.get("dims"))
        return {
            "width": grid.width,
            "height": grid.height,
            "bounds": list(grid.bounds),
            "sigma": grid.sigma,
            "density": np.asarray(grid.density, dtype=np.float32).ravel().tolist(),
        }

    def _selection_set(self, payload) -> dict:
        dataset = self.app.resolve_dataset(payload["dataset"])
        self.app.submit(self.app.data.set_selection, dataset, payload.get("indices", []))
        return {}

    def _selection_get(self, payload) -> dict:
        dataset = self.app.resolve_dataset(payload["dataset"])
        return {"indices": self.app.submit(self.app.data.get_selection, dataset).tolist()}

    def _dataset_group(self, payload) -> dict:
        datasets = [self.app.resolve_dataset(d) for d in payload.get("datasets", [])]
        group_id = self.app.submit(self.app.data.group_datasets, datasets)
        return {"groupId": group_id}

    def _action_list(self, payload) -> dict:
        def build():
            trees = []
            if "instance" in payload:
                instance = self.app.registry.instance(payload["instance"])
                if instance.settings_root is not None:
                    trees.append(self.app.actions.serialize_action_tree(
                        instance.settings_root, include_ids=True))
            elif "dataset" in payload:
                dataset = self.app.resolve_dataset(payload["dataset"])
                for action_id in self.app.data.record(dataset).attached_actions:
                    trees.append(self.app.actions.serialize_action_tree(
                        action_id, include_ids=True))
            else:
                raise ValidationError("action.list needs 'instance' or 'dataset'")
            return trees
        return {"actions": self.app.submit(build)}

    def _action_set(self, payload) -> dict:
        self.app.submit(self.app.actions.set_value, payload["action"], payload["value"])
        return {}

    def _action_fire(self, payload) -> dict:
        self.app.submit(self.app.actions.fire_trigger, payload["action"])
        return {}

    def _action_publish(self, payload) -> dict:
        public_id = self.app.submit(self.app.actions.publish_action,
                                    payload["action"], payload["publicName"])
        return {"publicId": public_id}

    def _action_connect(self, payload) -> dict:
        self.app.submit(self.app.actions.connect_action,
                        payload["action"], payload["publicName"])
        return {}

    def _action_disconnect(self, payload) -> dict:
        self.app.submit(self.app.actions.disconnect_action, payload["action"])
        return {}

    def _action_pool(self, payload) -> dict:
        def build():
            entries = []
            for name in self.app.actions.pool_names():
                entry = self.app.actions.pool_entry(name)
                entries.append({"publicName": name, "kind": entry.kind.value,
                                "value": entry.payload.to_json()})
            return entries
        return {"entries": self.app.submit(build)}

    def _plugin_list(self, payload) -> dict:
        def build():
            kind = payload.get("kind")
            if "dataset" in payload:
                dataset = self.app.resolve_dataset(payload["dataset"])
                descriptors = self.app.registry.list_compatible(dataset)
            else:
                descriptors = self.app.registry.list_plugins()
            if kind:
                descriptors = [d for d in descriptors if d.kind.value == kind]
            return [{"pluginId": d.plugin_id, "kind": d.kind.value,
                     "displayName": d.display_name,
                     "acceptedInputKinds": sorted(d.accepted_input_kinds),
                     "version": d.version} for d in descriptors]
        return {"plugins": self.app.submit(build)}

    def _plugin_instances(self, payload) -> dict:
        def build():
            return [{"instanceId": i.instance_id,
                     "pluginId": i.descriptor.plugin_id,
                     "kind": i.descriptor.kind.value,
                     "displayName": i.descriptor.display_name,
                     "inputs": list(i.bound_inputs),
                     "output": i.output_dataset,
                     "state": i.state.value}
                    for i in self.app.registry.instances()]
        return {"instances": self.app.submit(build)}

    def _plugin_instantiate(self, payload) -> dict:
        inputs = [self.app.resolve_dataset(d) for d in payload.get("inputs", [])]
        instance_id = self.app.submit(self.app.registry.instantiate,
                                      payload["pluginId"], inputs)
        instance = self.app.registry.instance(instance_id)
        return {"instanceId": instance_id, "outputGuid": instance.output_dataset,
                "state": instance.state.value}

    def _plugin_control(self, payload) -> dict:
        state = self.app.submit(self.app.registry.control,
                                payload["instanceId"], payload["command"])
        return {"state": state.value}

    def _plugin_destroy(self, payload) -> dict:
        self.app.submit(self.app.registry.destroy_instance, payload["instanceId"])
        return {}

    def _view_bind(self, payload) -> dict:
        datasets = [self.app.resolve_dataset(d) for d in payload.get("datasets", [])]
        self.app.bind_view(payload["instanceId"], datasets)
        return {}

    def _project_save(self, payload) -> dict:
        self.app.save_project(payload["path"])
        return {}

    def _project_load(self, payload) -> dict:
        report = self.app.load_project(payload["path"])
        return {"skippedPlugins": report.skipped_plugins,
                "linkWarnings": report.link_warnings}

    def _workspace_save(self, payload) -> dict:
        self.app.save_workspace(payload["path"])
        return {}

    def _workspace_load(self, payload) -> dict:
        report = self.app.load_workspace(payload["path"])
        return {"skippedPlugins": report.skipped_plugins,
                "linkWarnings": report.link_warnings}

    def _preset_save(self, payload) -> dict:
        self.app.submit(self.app.actions.save_preset, payload["root"], payload["name"])
        return {}

    def _preset_apply(self, payload) -> dict:
        self.app.submit(self.app.actions.apply_preset, payload["root"], payload["name"])
        return {}

    def _layout_get(self, payload) -> dict:
        return self.app.get_layout()

    def _layout_set(self, payload) -> dict:
        self.app.set_layout(payload.get("layout"))
        return {}
