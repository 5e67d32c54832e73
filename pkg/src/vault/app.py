"""Application facade: the single-writer core and its high-level API.

All mutating operations execute inside one reentrant lock (the "core
context") via :meth:`Application.submit`; worker threads never touch
managers directly. Event dispatch and action fan-out happen inside the
same command, after the mutation, so observers always see consistent
state.

Both the wire-protocol server and the CLI are thin clients of this class;
neither owns a second code path into the managers.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from vault.analytics.plugins import MeanShiftPlugin, NormalizePlugin, PcaPlugin, TsnePlugin
from vault.core.actions import ActionManager
from vault.core.data import DataManager
from vault.core.events import EventBus
from vault.core.payloads import ClusterPayload, ImagePayload, PointPayload
from vault.core.registry import PluginRegistry, ViewPlugin
from vault.core.views import (
    DataHierarchyViewPlugin,
    DataPropertiesViewPlugin,
    ImageViewPlugin,
    ScatterplotViewPlugin,
)
from vault.errors import NotFoundError, ValidationError, WorkspaceLockedError
from vault.io.plugins import (
    BinaryLoaderPlugin,
    BinaryWriterPlugin,
    CsvLoaderPlugin,
    CsvWriterPlugin,
    ImageStackLoaderPlugin,
)

BUILTIN_PLUGINS = (
    TsnePlugin,
    PcaPlugin,
    MeanShiftPlugin,
    NormalizePlugin,
    CsvLoaderPlugin,
    CsvWriterPlugin,
    BinaryLoaderPlugin,
    BinaryWriterPlugin,
    ImageStackLoaderPlugin,
    ScatterplotViewPlugin,
    ImageViewPlugin,
    DataHierarchyViewPlugin,
    DataPropertiesViewPlugin,
)


def validate_layout(node, known_instances, seen=None) -> None:
    """Check a layout tree: known node types, instances referenced at most once."""
    if seen is None:
        seen = set()
    if not isinstance(node, dict) or "type" not in node:
        raise ValidationError("layout nodes are objects with a 'type' field")
    kind = node["type"]
    if kind == "split":
        if node.get("orientation") not in ("h", "v"):
            raise ValidationError("split orientation must be 'h' or 'v'")
        ratio = node.get("ratio", 0.5)
        if not 0.0 <= float(ratio) <= 1.0:
            raise ValidationError(f"split ratio {ratio} outside [0, 1]")
        children = node.get("children", [])
        if len(children) != 2:
            raise ValidationError("split nodes have exactly 2 children")
        for child in children:
            validate_layout(child, known_instances, seen)
    elif kind == "tabs":
        for instance_id in node.get("instances", []):
            _check_layout_instance(instance_id, known_instances, seen)
    elif kind == "leaf":
        _check_layout_instance(node.get("instance"), known_instances, seen)
    else:
        raise ValidationError(f"unknown layout node type {kind!r}")


def _check_layout_instance(instance_id, known_instances, seen) -> None:
    if instance_id not in known_instances:
        raise ValidationError(f"layout references unknown instance {instance_id!r}")
    if instance_id in seen:
        raise ValidationError(f"layout references instance {instance_id!r} twice")
    seen.add(instance_id)


class Application:
    def __init__(self, preset_dir: Optional[Path] = None, register_builtins: bool = True):
        self._lock = threading.RLock()
        self.bus = EventBus()
        self.data = DataManager(self.bus)
        self.actions = ActionManager(self.data, preset_dir=preset_dir)
        self.registry = PluginRegistry(self)
        self.layout: Optional[dict] = None
        self.locked: bool = False
        self.title: str = "untitled"
        if register_builtins:
            for plugin_cls in BUILTIN_PLUGINS:
                self.registry.register_class(plugin_cls)

    def submit(self, fn, *args, **kwargs):
        """Run a command on the core context (serialized, reentrant)."""
        with self._lock:
            return fn(*args, **kwargs)

    # -- datasets ----------------------------------------------------------

    def resolve_dataset(self, name_or_guid: str) -> str:
        """Dataset lookup by GUID first, then by first name match."""
        def find():
            if name_or_guid in self.data:
                return name_or_guid
            rec = self.data.find_by_name(name_or_guid)
            if rec is None:
                raise NotFoundError(f"no dataset named {name_or_guid!r}")
            return rec.id
        return self.submit(find)

    def hierarchy_snapshot(self) -> list[dict]:
        """JSON-ready description of every dataset, creation order."""
        def snap():
            nodes = []
            for rec in self.data.records():
                node = {
                    "guid": rec.id,
                    "name": rec.name,
                    "kind": rec.payload.kind,
                    "parentGuid": rec.parent,
                    "derived": rec.derived,
                    "effectiveCount": self.data.effective_count(rec.id),
                    "groupId": rec.group_id,
                    "properties": dict(rec.properties),
                    "attachedActions": list(rec.attached_actions),
                }
                if isinstance(rec.payload, PointPayload):
                    node["numDims"] = (rec.payload.num_dims)
                    node["dimNames"] = list(rec.payload.dim_names)
                elif isinstance(rec.payload, ImagePayload):
                    node["width"] = rec.payload.width
                    node["height"] = rec.payload.height
                elif isinstance(rec.payload, ClusterPayload):
                    node["clusters"] = [
                        {"name": c.name, "color": list(c.color),
                         "size": int(c.member_indices.size),
                         "members": c.member_indices.tolist()}
                        for c in rec.payload.clusters
                    ]
                nodes.append(node)
            return nodes
        return self.submit(snap)

    # -- plugins -----------------------------------------------------------

    def load_file(self, path, kind: str = "csv", **options):
        """Run the matching loader plugin; returns the new dataset id(s)."""
        loader_ids = {"csv": "org.vault.csv_loader", "bin": "org.vault.bin_loader",
                      "stack": "org.vault.image_loader"}
        if kind not in loader_ids:
            raise ValidationError(f"unknown load kind {kind!r}; one of {sorted(loader_ids)}")
        instance_id = self.submit(self.registry.instantiate, loader_ids[kind], [])
        try:
            return self.registry.instance(instance_id).plugin.load(path, **options)
        finally:
            self.submit(self.registry.destroy_instance, instance_id)

    def export_csv(self, dataset: str, path, **options) -> None:
        dataset_id = self.resolve_dataset(dataset)
        instance_id = self.submit(self.registry.instantiate,
                                  "org.vault.csv_writer", [dataset_id])
        try:
            self.registry.instance(instance_id).plugin.write(dataset_id, path, **options)
        finally:
            self.submit(self.registry.destroy_instance, instance_id)

    def set_instance_param(self, instance_id: str, key: str, raw_value: str) -> None:
        """Set a settings-tree child by (normalized) name; reuses action validation."""
        def apply():
            instance = self.registry.instance(instance_id)
            if instance.settings_root is None:
                raise ValidationError("instance has no settings")
            wanted = key.strip().lower().replace("_", " ")
            root = self.actions.action(instance.settings_root)
            for child_id in root.children:
                child = self.actions.action(child_id)
                if child.name.lower() == wanted:
                    self.actions.set_value(child_id, _coerce(raw_value))
                    return
            raise NotFoundError(f"no parameter {key!r} on {instance.descriptor.plugin_id}")
        self.submit(apply)

    def density_grid(self, dataset: str, sigma: float, resolution: int = 256,
                     dims=None):
        """KDE grid over two dimensions of a dataset (default: first two)."""
        from vault.analytics.kde import kde_grid
        dataset_id = self.resolve_dataset(dataset)
        view = self.submit(self.data.get_data_view, dataset_id, dims or [0, 1])
        return kde_grid(view.astype("float64"), sigma, resolution)

    def bind_view(self, instance_id: str, dataset_ids: list[str]) -> None:
        def apply():
            instance = self.registry.instance(instance_id)
            for dataset_id in dataset_ids:
                payload_kind = self.data.record(dataset_id).payload.kind
                if payload_kind not in instance.descriptor.accepted_input_kinds:
                    raise ValidationError(
                        f"{instance.descriptor.display_name} does not accept "
                        f"{payload_kind!r} data")
            if isinstance(instance.plugin, ViewPlugin):
                instance.plugin.bind(dataset_ids)
            else:
                instance.bound_inputs = list(dataset_ids)
        self.submit(apply)

    # -- layout and locking --------------------------------------------------

    def get_layout(self) -> dict:
        return self.submit(lambda: {"layout": self.layout, "locked": self.locked})

    def set_layout(self, layout: Optional[dict]) -> None:
        def apply():
            if self.locked:
                raise WorkspaceLockedError("workspace is locked; layout is read-only")
            if layout is not None:
                validate_layout(layout, {i.instance_id for i in self.registry.instances()})
            self.layout = layout
        self.submit(apply)

    # -- persistence (wired to the project store) ---------------------------

    def save_project(self, path) -> None:
        from vault.project.store import save_project
        save_project(self, path)

    def load_project(self, path):
        from vault.project.store import load_project
        return load_project(self, path)

    def save_workspace(self, path) -> None:
        from vault.project.store import save_workspace
        save_workspace(self, path)

    def load_workspace(self, path):
        from vault.project.store import load_workspace
        return load_workspace(self, path)

    def clear_session(self) -> None:
        """Remove every dataset, instance, action, and the layout."""
        def wipe():
            for instance in list(self.registry.instances()):
                self.registry.destroy_instance(instance.instance_id)
            for rec in list(self.data.roots()):
                self.data.remove_dataset(rec.id)
            self.actions.reset()
            self.layout = None
            self.locked = False
        self.submit(wipe)


def _coerce(raw: str):
    """CLI/wire parameter strings to the natural Python value."""
    if isinstance(raw, (int, float, bool, list, dict)):
        return raw
    text = str(raw).strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text
