import json
import zipfile

import numpy as np
import pytest

from vault.app import Application
from vault.core.payloads import PointPayload
from vault.errors import FormatError, WorkspaceLockedError

from conftest import points


@pytest.fixture
def app(tmp_path):
    return Application(preset_dir=tmp_path / "presets")


def snapshot_state(app):
    """Observable state; selections excluded by construction."""
    state = {"hierarchy": [], "instances": [], "pool": [], "layout": app.layout,
             "locked": app.locked}
    for node in app.hierarchy_snapshot():
        node = dict(node)
        node.pop("attachedActions")  # action ids are fresh on load
        node.pop("groupId")
        state["hierarchy"].append(node)
    for rec in app.data.records():
        if isinstance(rec.payload, PointPayload) and rec.rows is None:
            state[f"bytes:{rec.id}"] = rec.payload.values.tobytes()
    state["groups"] = sorted(sorted(g.member_ids) for g in app.data.groups())
    for instance in app.registry.instances():
        tree = (app.actions.serialize_action_tree(instance.settings_root)
                if instance.settings_root else None)
        state["instances"].append({
            "id": instance.instance_id,
            "plugin": instance.descriptor.plugin_id,
            "inputs": list(instance.bound_inputs),
            "output": instance.output_dataset,
            "settings": tree,
        })
    for name in app.actions.pool_names():
        entry = app.actions.pool_entry(name)
        state["pool"].append((name, entry.kind.value, entry.payload.to_json()))
    return state


def build_session(app):
    pts = app.submit(app.data.add_dataset, points(12, 4), "hydice")
    app.submit(app.data.set_property, pts, "source", "/tmp/demo.csv")
    sub = app.submit(app.data.create_subset, pts, [1, 3, 5], "picked")
    tsne = app.submit(app.registry.instantiate, "org.vault.tsne", [pts])
    app.set_instance_param(tsne, "perplexity", "3")
    scatter = app.submit(app.registry.instantiate, "org.vault.scatterplot",
                         [app.registry.instance(tsne).output_dataset])
    sigma = next(c for c in app.actions.action(
        app.registry.instance(scatter).settings_root).children
        if app.actions.action(c).name == "sigma")
    app.submit(app.actions.publish_action, sigma, "kde-sigma")
    other = app.submit(app.data.add_dataset, points(12, 2, seed=5), "aux")
    app.submit(app.data.group_datasets, [pts, other])
    app.set_layout({"type": "split", "orientation": "h", "ratio": 0.6,
                    "children": [{"type": "leaf", "instance": scatter},
                                 {"type": "tabs", "instances": []}]})
    return pts, sub, tsne, scatter


class TestProjectRoundTrip:
    def test_round_trip_preserves_state(self, app, tmp_path):
        build_session(app)
        before = snapshot_state(app)
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        report = app.load_project(f)
        assert report.skipped_plugins == [] and report.link_warnings == []
        assert snapshot_state(app) == before

    def test_selections_reset_on_load(self, app, tmp_path):
        pts, *_ = build_session(app)
        app.submit(app.data.set_selection, pts, [0, 2])
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        app.load_project(f)
        assert app.data.get_selection(app.resolve_dataset("hydice")).tolist() == []

    def test_consecutive_saves_byte_identical(self, app, tmp_path):
        build_session(app)
        a, b = tmp_path / "a.mvproj", tmp_path / "b.mvproj"
        app.save_project(a)
        app.save_project(b)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_session_round_trips(self, app, tmp_path):
        f = tmp_path / "empty.mvproj"
        app.save_project(f)
        app.load_project(f)
        assert app.hierarchy_snapshot() == []

    def test_archive_structure(self, app, tmp_path):
        build_session(app)
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        with zipfile.ZipFile(f) as z:
            names = z.namelist()
            doc = json.loads(z.read("project.json"))
        # 3 point payload owners: hydice, t-SNE embedding, aux (subset owns none).
        assert sum(1 for n in names if n.startswith("blobs/")) == 3
        by_name = {n["name"]: n for n in doc["datasets"]}
        assert by_name["picked"]["blobRef"] is None
        assert by_name["picked"]["subsetIndices"] == [1, 3, 5]
        assert by_name["t-SNE embedding"]["parentGuid"] == by_name["hydice"]["guid"]

    def test_unknown_plugin_skipped_with_report(self, app, tmp_path):
        build_session(app)
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        # Tamper: rename a plugin id inside the archive.
        with zipfile.ZipFile(f) as z:
            members = {n: z.read(n) for n in z.namelist()}
        doc = json.loads(members["workspace.json"])
        doc["instances"][0]["pluginId"] = "org.x.unknown"
        members["workspace.json"] = json.dumps(doc).encode()
        with zipfile.ZipFile(f, "w") as z:
            for name, blob in members.items():
                z.writestr(name, blob)
        report = app.load_project(f)
        assert report.skipped_plugins == ["org.x.unknown"]

    def test_dangling_parent_refused(self, app, tmp_path):
        build_session(app)
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        with zipfile.ZipFile(f) as z:
            members = {n: z.read(n) for n in z.namelist()}
        doc = json.loads(members["project.json"])
        doc["datasets"][1]["parentGuid"] = "f" * 32
        members["project.json"] = json.dumps(doc).encode()
        with zipfile.ZipFile(f, "w") as z:
            for name, blob in members.items():
                z.writestr(name, blob)
        with pytest.raises(FormatError, match="dangling"):
            app.load_project(f)

    def test_missing_blob_refused_with_guid(self, app, tmp_path):
        pts, *_ = build_session(app)
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        with zipfile.ZipFile(f) as z:
            members = {n: z.read(n) for n in z.namelist()}
        del members[f"blobs/{pts}.bin"]
        with zipfile.ZipFile(f, "w") as z:
            for name, blob in members.items():
                z.writestr(name, blob)
        with pytest.raises(FormatError, match=pts):
            app.load_project(f)

    def test_unknown_version_refused(self, app, tmp_path):
        f = tmp_path / "s.mvproj"
        app.save_project(f)
        with zipfile.ZipFile(f) as z:
            members = {n: z.read(n) for n in z.namelist()}
        doc = json.loads(members["project.json"])
        doc["formatVersion"] = 99
        members["project.json"] = json.dumps(doc).encode()
        with zipfile.ZipFile(f, "w") as z:
            for name, blob in members.items():
                z.writestr(name, blob)
        with pytest.raises(FormatError, match="formatVersion"):
            app.load_project(f)

    def test_derived_with_map_round_trips(self, app, tmp_path):
        pts = app.submit(app.data.add_dataset, points(10, 3), "base")
        sub = app.submit(app.data.create_subset, pts, [2, 4, 6, 8], "sub")
        emb = app.submit(app.data.derive_dataset, sub, "emb", points(4, 2, seed=2))
        subsub = app.submit(app.data.create_subset, emb, [0, 3], "subsub")
        f = tmp_path / "m.mvproj"
        app.save_project(f)
        app.load_project(f)
        emb2 = app.resolve_dataset("emb")
        subsub2 = app.resolve_dataset("subsub")
        assert app.data.record(emb2).raw_map.tolist() == [2, 4, 6, 8]
        assert app.data.record(subsub2).raw_map.tolist() == [2, 8]
        app.submit(app.data.set_selection, subsub2, [0, 1])
        assert app.data.get_selection(app.resolve_dataset("base")).tolist() == [2, 8]


class TestWorkspace:
    def test_workspace_binds_by_name(self, app, tmp_path):
        build_session(app)
        f = tmp_path / "w.mvwork"
        app.save_workspace(f)
        fresh = Application(preset_dir=tmp_path / "p2")
        fresh.submit(fresh.data.add_dataset, points(12, 4, seed=9), "hydice")
        report = fresh.load_workspace(f)
        assert report.skipped_plugins == []
        tsne = [i for i in fresh.registry.instances()
                if i.descriptor.plugin_id == "org.vault.tsne"]
        assert len(tsne) == 1
        assert [fresh.data.record(d).name for d in tsne[0].bound_inputs] == ["hydice"]

    def test_unmatched_instances_left_unbound(self, app, tmp_path):
        build_session(app)
        f = tmp_path / "w.mvwork"
        app.save_workspace(f)
        fresh = Application(preset_dir=tmp_path / "p2")
        fresh.load_workspace(f)
        for instance in fresh.registry.instances():
            assert instance.bound_inputs == []

    def test_locked_workspace_refuses_layout_mutation(self, app, tmp_path):
        build_session(app)
        app.locked = True
        f = tmp_path / "locked.mvwork"
        app.save_workspace(f)
        fresh = Application(preset_dir=tmp_path / "p2")
        fresh.load_workspace(f)
        assert fresh.locked
        with pytest.raises(WorkspaceLockedError):
            fresh.set_layout({"type": "tabs", "instances": []})

    def test_layout_round_trip_structural_equality(self, app, tmp_path):
        build_session(app)
        before = app.layout
        f = tmp_path / "w.mvwork"
        app.save_workspace(f)
        app.load_workspace(f)
        assert app.layout == before

    def test_link_restored_through_workspace(self, app, tmp_path):
        build_session(app)
        f = tmp_path / "w.mvwork"
        app.save_workspace(f)
        report = app.load_workspace(f)
        assert report.link_warnings == []
        scatter = [i for i in app.registry.instances()
                   if i.descriptor.plugin_id == "org.vault.scatterplot"][0]
        sigma = next(c for c in app.actions.action(scatter.settings_root).children
                     if app.actions.action(c).name == "sigma")
        assert app.actions.action(sigma).link == "kde-sigma"


class TestRandomizedRoundTrip:
    def test_random_sessions(self, tmp_path):
        rng = np.random.default_rng(55)
        for case in range(8):
            app = Application(preset_dir=tmp_path / f"p{case}")
            datasets = [app.submit(app.data.add_dataset,
                                   points(int(rng.integers(5, 30)), int(rng.integers(2, 6)),
                                          seed=int(rng.integers(1000))),
                                   f"root{case}.{j}")
                        for j in range(int(rng.integers(1, 4)))]
            for _ in range(int(rng.integers(0, 4))):
                src = datasets[int(rng.integers(len(datasets)))]
                count = app.data.effective_count(src)
                if rng.random() < 0.5 and count > 2:
                    take = np.sort(rng.choice(count, size=int(rng.integers(1, count)),
                                              replace=False))
                    datasets.append(app.submit(app.data.create_subset, src, take, "sub"))
                else:
                    datasets.append(app.submit(
                        app.data.derive_dataset, src, "emb",
                        points(count, 2, seed=int(rng.integers(1000)))))
            for _ in range(int(rng.integers(0, 3))):
                src = datasets[int(rng.integers(len(datasets)))]
                if app.data.record(src).payload.kind == "points":
                    app.submit(app.registry.instantiate, "org.vault.scatterplot", [src])
            f = tmp_path / f"case{case}.mvproj"
            app.save_project(f)
            before = snapshot_state(app)
            app.save_project(f)
            report = app.load_project(f)
            assert report.skipped_plugins == []
            assert snapshot_state(app) == before
            app.save_project(tmp_path / f"case{case}b.mvproj")
            assert (tmp_path / f"case{case}b.mvproj").read_bytes() == f.read_bytes()
