"""Project and workspace persistence.

A project (``.mvproj``) is a self-contained deflate-compressed zip:

* ``project.json``   -- title, format version, the dataset tree (per node:
  guid, name, kind, parentGuid, derived flag, subsetIndices, properties,
  blobRef; clusters/extents inline for non-point payloads), and groups.
* ``workspace.json`` -- layout tree, locked flag, plugin instances
  (plugin id, bound input guids *and names*, output, serialized settings),
  public pool entries, and links as ``{actionPath -> publicName}``.
* ``blobs/<guid>.bin`` -- MVBIN payloads, one per owning point dataset.

Saves are deterministic: zip members are sorted, timestamps zeroed, JSON
key-sorted; saving an unchanged session twice produces byte-identical
files. Saving is side-effect-free and writes temp-then-rename, so a
failed save never leaves a partial archive.

Loading replaces the session. Selections are not persisted and come back
empty. Unknown plugin ids degrade gracefully: the instance is skipped and
recorded in the returned :class:`LoadReport`. A workspace (``.mvwork``)
is the ``workspace.json`` document alone, saved as a plain JSON file;
loading one keeps the current datasets and re-binds instances by dataset
name, leaving unmatched instances unbound.
"""

from __future__ import annotations

import json
import os
import tempfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from vault.core.actions import ActionKind
from vault.core.payloads import Cluster, ClusterPayload, ImagePayload, PointPayload
from vault.core.registry import PluginKind, ViewPlugin
from vault.errors import FormatError
from vault.io.mvbin import parse_mvbin, serialize_mvbin

PROJECT_FORMAT_VERSION = 1
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass
class LoadReport:
    skipped_plugins: list[str] = field(default_factory=list)
    link_warnings: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.skipped_plugins and not self.link_warnings


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def _atomic_write(path: Path, writer) -> None:
    """Write via a temp file in the target directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    tmp = Path(tmp_name)
    try:
        with os.fdopen(handle, "wb") as fp:
            writer(fp)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


# -- building documents ------------------------------------------------------


def _dataset_nodes(app) -> tuple[list[dict], dict[str, bytes]]:
    nodes, blobs = [], {}
    for rec in app.data.records():
        node = {
            "guid": rec.id,
            "name": rec.name,
            "kind": rec.payload.kind,
            "parentGuid": rec.parent,
            "derived": rec.derived,
            "subsetIndices": None if rec.raw_map is None else rec.raw_map.tolist(),
            "properties": dict(rec.properties),
            "blobRef": None,
        }
        if isinstance(rec.payload, PointPayload):
            if rec.rows is None:  # payload owner (roots and derived sets)
                node["blobRef"] = f"blobs/{rec.id}.bin"
                blobs[f"blobs/{rec.id}.bin"] = serialize_mvbin(
                    rec.payload.values, rec.payload.dim_names)
        elif isinstance(rec.payload, ImagePayload):
            node["width"] = rec.payload.width
            node["height"] = rec.payload.height
        else:
            node["clusters"] = [
                {"name": c.name, "color": list(c.color), "members": c.member_indices.tolist()}
                for c in rec.payload.clusters
            ]
        nodes.append(node)
    return nodes, blobs


def _project_doc(app) -> tuple[dict, dict[str, bytes]]:
    nodes, blobs = _dataset_nodes(app)
    doc = {
        "formatVersion": PROJECT_FORMAT_VERSION,
        "title": app.title,
        "datasets": nodes,
        "groups": [{"id": g.id, "members": list(g.member_ids)} for g in app.data.groups()],
    }
    return doc, blobs


def _collect_links(app, instance) -> list[dict]:
    links = []

    def walk(action_id, path):
        action = app.actions.action(action_id)
        if action.link is not None:
            links.append({"actionPath": "/".join(path), "publicName": action.link})
        for idx, child in enumerate(action.children):
            walk(child, path + [str(idx)])

    if instance.settings_root is not None:
        walk(instance.settings_root, [instance.instance_id])
    return links


def _workspace_doc(app) -> dict:
    instances, links = [], []
    for instance in app.registry.instances():
        if instance.descriptor.kind in (PluginKind.LOADER, PluginKind.WRITER):
            continue  # one-shot plumbing, never part of a workspace
        entry = {
            "instanceId": instance.instance_id,
            "pluginId": instance.descriptor.plugin_id,
            "inputGuids": list(instance.bound_inputs),
            "inputNames": [app.data.record(d).name for d in instance.bound_inputs],
            "outputGuid": instance.output_dataset,
            "outputName": (app.data.record(instance.output_dataset).name
                           if instance.output_dataset else None),
            "settings": (app.actions.serialize_action_tree(
                instance.settings_root, include_links=False)
                if instance.settings_root else None),
        }
        instances.append(entry)
        links.extend(_collect_links(app, instance))
    pool = [
        {"publicName": name, "kind": app.actions.pool_entry(name).kind.value,
         "value": app.actions.pool_entry(name).payload.to_json()}
        for name in app.actions.pool_names()
    ]
    return {
        "formatVersion": PROJECT_FORMAT_VERSION,
        "layout": app.layout,
        "locked": app.locked,
        "instances": instances,
        "pool": pool,
        "links": sorted(links, key=lambda l: l["actionPath"]),
    }


# -- saving -------------------------------------------------------------------


def save_project(app, path) -> None:
    """Write the whole session as a self-contained archive."""
    path = Path(path)

    def snapshot():
        doc, blobs = _project_doc(app)
        members = {"project.json": _json_bytes(doc),
                   "workspace.json": _json_bytes(_workspace_doc(app))}
        members.update(blobs)
        return members

    members = app.submit(snapshot)

    def write(fp):
        with zipfile.ZipFile(fp, "w", compression=zipfile.ZIP_DEFLATED) as archive:
            for name in sorted(members):
                info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
                info.compress_type = zipfile.ZIP_DEFLATED
                info.external_attr = 0o644 << 16
                archive.writestr(info, members[name])

    _atomic_write(path, write)


def save_workspace(app, path) -> None:
    """Write the workspace document alone (no data blobs), as plain JSON."""
    doc = app.submit(lambda: _workspace_doc(app))
    _atomic_write(Path(path), lambda fp: fp.write(_json_bytes(doc)))


# -- loading ------------------------------------------------------------------


def _read_archive(path: Path) -> tuple[dict, dict, dict[str, bytes]]:
    try:
        with zipfile.ZipFile(path) as archive:
            names = set(archive.namelist())
            if "project.json" not in names or "workspace.json" not in names:
                raise FormatError(f"{path.name}: not a project archive")
            project = json.loads(archive.read("project.json"))
            workspace = json.loads(archive.read("workspace.json"))
            blobs = {n: archive.read(n) for n in names if n.startswith("blobs/")}
    except zipfile.BadZipFile as exc:
        raise FormatError(f"{path.name}: not a zip archive") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: malformed JSON member: {exc}") from exc
    return project, workspace, blobs


def _validate_project(project: dict, blobs: dict[str, bytes]) -> dict[str, tuple]:
    if project.get("formatVersion") != PROJECT_FORMAT_VERSION:
        raise FormatError(
            f"unknown project formatVersion {project.get('formatVersion')!r}")
    guids = {node["guid"] for node in project.get("datasets", [])}
    payloads = {}
    for node in project.get("datasets", []):
        parent = node.get("parentGuid")
        if parent is not None and parent not in guids:
            raise FormatError(f"dataset {node['guid']} has dangling parentGuid {parent}")
        ref = node.get("blobRef")
        if ref is not None:
            if ref not in blobs:
                raise FormatError(f"missing blob for dataset {node['guid']}")
            payloads[node["guid"]] = parse_mvbin(blobs[ref])
    return payloads


def _restore_datasets(app, project: dict, payloads: dict) -> None:
    for node in project.get("datasets", []):
        guid = node["guid"]
        parent = node.get("parentGuid")
        kind = node.get("kind")
        subset = node.get("subsetIndices")
        if kind == "points":
            if node.get("blobRef") is not None:
                values, dims = payloads[guid]
                payload = PointPayload(values, dims)
                if node.get("derived"):
                    app.data.derive_dataset(parent, node["name"], payload, guid=guid)
                else:
                    app.data.add_dataset(payload, node["name"], parent, guid=guid)
            else:
                # Index-only subset: recover source-local indices from the
                # parent's effective raw-space mapping.
                raw = np.asarray(subset, dtype=np.int64)
                parent_map = app.data.record(parent).raw_map
                local = raw if parent_map is None else np.searchsorted(parent_map, raw)
                app.data.create_subset(parent, local, node["name"], guid=guid)
        elif kind == "image":
            app.data.add_dataset(ImagePayload(node["width"], node["height"]),
                                 node["name"], parent, guid=guid)
        elif kind == "clusters":
            clusters = [Cluster(c["name"], tuple(c["color"]), c["members"])
                        for c in node.get("clusters", [])]
            payload = ClusterPayload(clusters)
            if node.get("derived"):
                app.data.derive_dataset(parent, node["name"], payload, guid=guid)
            else:
                app.data.add_dataset(payload, node["name"], parent, guid=guid)
        else:
            raise FormatError(f"unknown dataset kind {kind!r}")
        for key, value in node.get("properties", {}).items():
            app.data.set_property(guid, key, value)
    for group in project.get("groups", []):
        app.data.group_datasets(group["members"])


def _restore_workspace(app, workspace: dict, report: LoadReport,
                       *, bind_by_name: bool) -> None:
    if workspace.get("formatVersion") != PROJECT_FORMAT_VERSION:
        raise FormatError(
            f"unknown workspace formatVersion {workspace.get('formatVersion')!r}")
    for entry in workspace.get("pool", []):
        app.actions.restore_pool_entry(entry["publicName"],
                                       ActionKind(entry["kind"]), entry["value"])
    restored = {}
    for entry in workspace.get("instances", []):
        plugin_id = entry["pluginId"]
        try:
            app.registry.descriptor(plugin_id)
        except Exception:
            report.skipped_plugins.append(plugin_id)
            continue
        if bind_by_name:
            inputs = []
            for name in entry.get("inputNames", []):
                rec = app.data.find_by_name(name)
                if rec is not None:
                    inputs.append(rec.id)
        else:
            inputs = list(entry.get("inputGuids", []))
        instance_id = app.registry.instantiate(
            plugin_id, inputs, instance_id=entry["instanceId"], restore=True)
        instance = app.registry.instance(instance_id)
        if instance.settings_root is not None and entry.get("settings"):
            app.actions.apply_tree_values(instance.settings_root,
                                          entry["settings"]["action"])
        output = None
        if bind_by_name:
            if entry.get("outputName"):
                rec = app.data.find_by_name(entry["outputName"])
                output = rec.id if rec is not None else None
        else:
            output = entry.get("outputGuid")
        if output is not None:
            app.registry.adopt_output(instance_id, output)
        if isinstance(instance.plugin, ViewPlugin) and inputs:
            instance.plugin.bind(inputs)
        restored[instance_id] = instance
    for link in workspace.get("links", []):
        action_id = _resolve_action_path(app, link["actionPath"])
        if action_id is None:
            report.link_warnings.append(
                f"link path {link['actionPath']!r} no longer resolves")
            continue
        app.actions.restore_link(action_id, link["publicName"])
        report.link_warnings.extend(app.actions.restore_warnings)
        app.actions.restore_warnings = []
    layout = workspace.get("layout")
    if layout is not None:
        known = {i.instance_id for i in app.registry.instances()}
        from vault.app import validate_layout
        validate_layout(layout, known)
    app.layout = layout
    app.locked = bool(workspace.get("locked", False))


def _resolve_action_path(app, path: str):
    head, *indices = path.split("/")
    try:
        instance = app.registry.instance(head)
    except Exception:
        return None
    action_id = instance.settings_root
    if action_id is None:
        return None
    for index in indices:
        children = app.actions.action(action_id).children
        i = int(index)
        if not 0 <= i < len(children):
            return None
        action_id = children[i]
    return action_id


def load_project(app, path) -> LoadReport:
    """Replace the session with an archive's contents (selections reset)."""
    path = Path(path)
    project, workspace, blobs = _read_archive(path)
    payloads = _validate_project(project, blobs)
    report = LoadReport()

    def apply():
        app.clear_session()
        app.title = project.get("title", "untitled")
        _restore_datasets(app, project, payloads)
        _restore_workspace(app, workspace, report, bind_by_name=False)

    app.submit(apply)
    return report


def load_workspace(app, path) -> LoadReport:
    """Replace instances/layout/pool, keep datasets; bind inputs by name."""
    path = Path(path)
    try:
        workspace = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: malformed workspace JSON: {exc}") from exc
    report = LoadReport()

    def apply():
        for instance in list(app.registry.instances()):
            app.registry.destroy_instance(instance.instance_id)
        app.actions.reset()
        for rec in app.data.records():
            rec.attached_actions.clear()
        app.layout = None
        app.locked = False
        _restore_workspace(app, workspace, report, bind_by_name=True)

    app.submit(apply)
    return report
