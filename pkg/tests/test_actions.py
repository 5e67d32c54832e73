import json

import numpy as np
import pytest

from vault.core.actions import ActionKind, ActionManager, ColorMapValue, PermissionFlags
from vault.errors import (
    FormatError,
    KindMismatchError,
    NameCollisionError,
    NotFoundError,
    PermissionDeniedError,
    ValidationError,
)

from conftest import points


@pytest.fixture
def actions(tmp_path):
    return ActionManager(preset_dir=tmp_path / "presets")


def make_decimal(actions, name="Sigma", value=0.15, lo=0.0, hi=1.0, **kw):
    return actions.create_action(ActionKind.DECIMAL, name, value=value, min=lo, max=hi, **kw)


class TestCreation:
    def test_decimal(self, actions):
        aid = make_decimal(actions)
        assert actions.value_of(aid) == 0.15

    def test_invalid_range(self, actions):
        with pytest.raises(ValidationError):
            make_decimal(actions, lo=1.0, hi=0.0)

    def test_empty_option_gets_minus_one(self, actions):
        aid = actions.create_action(ActionKind.OPTION, "metric", choices=[])
        assert actions.value_of(aid) == -1

    def test_bad_option_index(self, actions):
        with pytest.raises(ValidationError):
            actions.create_action(ActionKind.OPTION, "metric", choices=["a"], current_index=5)

    def test_attach_to_dataset(self, bus, data, tmp_path):
        actions = ActionManager(data, preset_dir=tmp_path)
        did = data.add_dataset(points(4, 2), "out")
        trig = actions.create_action(ActionKind.TRIGGER, "start")
        actions.attach_to_dataset(trig, did)
        assert data.record(did).attached_actions == [trig]

    def test_group_tree_no_sharing(self, actions):
        child = make_decimal(actions)
        g1 = actions.create_action(ActionKind.GROUP, "settings", children=[child])
        with pytest.raises(ValidationError):
            actions.create_action(ActionKind.GROUP, "other", children=[child])
        assert actions.action(g1).children == [child]


class TestSetValue:
    def test_clamp(self, actions):
        aid = make_decimal(actions)
        actions.set_value(aid, 1.5)
        assert actions.value_of(aid) == 1.0

    def test_clamp_idempotent(self, actions):
        aid = make_decimal(actions)
        actions.set_value(aid, 2.0)
        first = actions.value_of(aid)
        actions.set_value(aid, first)
        assert actions.value_of(aid) == first

    def test_kind_mismatch(self, actions):
        aid = actions.create_action(ActionKind.INTEGRAL, "iters", value=10, min=1, max=100)
        with pytest.raises(KindMismatchError):
            actions.set_value(aid, "not-a-number")

    def test_linked_sync(self, actions):
        a = make_decimal(actions, "A")
        b = make_decimal(actions, "B")
        actions.publish_action(a, "sigma")
        actions.connect_action(b, "sigma")
        actions.set_value(a, 0.3)
        assert actions.value_of(b) == pytest.approx(0.3)
        assert actions.pool_entry("sigma").payload.value == pytest.approx(0.3)

    def test_notification_counts(self, actions):
        a, b, c = (make_decimal(actions, n) for n in "abc")
        actions.publish_action(a, "sigma")
        actions.connect_action(b, "sigma")
        actions.connect_action(c, "sigma")
        seen = []
        actions.add_observer(seen.append)
        actions.set_value(a, 0.7)
        peer_updates = [ch for ch in seen if ch.scope == "action" and ch.target in (b, c)]
        pool_updates = [ch for ch in seen if ch.scope == "pool"]
        assert len(peer_updates) == 2 and len(pool_updates) == 1
        seen.clear()
        actions.set_value(a, 0.7)  # identical: silence
        assert seen == []

    def test_trigger_pulse(self, actions):
        t1 = actions.create_action(ActionKind.TRIGGER, "start")
        t2 = actions.create_action(ActionKind.TRIGGER, "start")
        actions.publish_action(t1, "start-all")
        actions.connect_action(t2, "start-all")
        seen = []
        actions.add_observer(seen.append)
        actions.fire_trigger(t1)
        fired = [ch.target for ch in seen if ch.scope == "trigger"]
        assert fired == [t1, t2]


class TestPublishConnect:
    def test_publish_and_link(self, actions):
        aid = make_decimal(actions)
        actions.publish_action(aid, "kde-sigma")
        assert actions.action(aid).link == "kde-sigma"
        assert "kde-sigma" in actions.pool_names()

    def test_publish_denied(self, actions):
        aid = make_decimal(actions, flags=PermissionFlags(may_publish=False))
        with pytest.raises(PermissionDeniedError):
            actions.publish_action(aid, "x")

    def test_name_collision(self, actions):
        a, b = make_decimal(actions, "a"), make_decimal(actions, "b")
        actions.publish_action(a, "sigma")
        with pytest.raises(NameCollisionError):
            actions.publish_action(b, "sigma")

    def test_connect_adopts_pool_value(self, actions):
        a = make_decimal(actions, "A", value=0.15)
        b = make_decimal(actions, "B", value=0.9)
        actions.publish_action(a, "kde-sigma")
        actions.connect_action(b, "kde-sigma")
        assert actions.value_of(b) == pytest.approx(0.15)

    def test_connect_kind_mismatch(self, actions):
        d = make_decimal(actions)
        i = actions.create_action(ActionKind.INTEGRAL, "iters", value=1, min=0, max=10)
        actions.publish_action(d, "sigma")
        with pytest.raises(KindMismatchError):
            actions.connect_action(i, "sigma")

    def test_connect_unknown_name(self, actions):
        aid = make_decimal(actions)
        with pytest.raises(NotFoundError):
            actions.connect_action(aid, "nope")

    def test_disconnect_keeps_value(self, actions):
        a, b = make_decimal(actions, "a"), make_decimal(actions, "b")
        actions.publish_action(a, "sigma")
        actions.connect_action(b, "sigma")
        actions.set_value(a, 0.4)
        actions.disconnect_action(b)
        actions.set_value(a, 0.8)
        assert actions.value_of(b) == pytest.approx(0.4)

    def test_disconnect_denied(self, actions):
        a = make_decimal(actions, "a")
        b = make_decimal(actions, "b", flags=PermissionFlags(may_disconnect=False))
        actions.publish_action(a, "sigma")
        actions.connect_action(b, "sigma")
        with pytest.raises(PermissionDeniedError):
            actions.disconnect_action(b)

    def test_fixed_point_after_random_sets(self, actions):
        rng = np.random.default_rng(3)
        pools = {}
        for p in range(5):
            name = f"pool{p}"
            members = [make_decimal(actions, f"m{p}.{i}", value=float(rng.random()))
                       for i in range(int(rng.integers(2, 8)))]
            actions.publish_action(members[0], name)
            for m in members[1:]:
                actions.connect_action(m, name)
            pools[name] = members
        for _ in range(200):
            name = f"pool{int(rng.integers(5))}"
            member = pools[name][int(rng.integers(len(pools[name])))]
            actions.set_value(member, float(rng.random()))
        for name, members in pools.items():
            values = {actions.value_of(m) for m in members}
            values.add(actions.pool_entry(name).payload.value)
            assert len(values) == 1


class TestSerialization:
    def test_round_trip_value_equal(self, actions):
        d = make_decimal(actions, "ratio", value=0.5)
        t = actions.create_action(ActionKind.TOGGLE, "on", value=True)
        g = actions.create_action(ActionKind.GROUP, "settings", children=[d, t])
        doc = actions.serialize_action_tree(g)
        rebuilt = actions.deserialize_action_tree(json.loads(json.dumps(doc)))
        assert actions.trees_value_equal(g, rebuilt)

    def test_unknown_kind(self, actions):
        with pytest.raises(FormatError):
            actions.deserialize_action_tree(
                {"formatVersion": 1, "action": {"kind": "Complex", "name": "x"}})

    def test_link_restored_when_pool_exists(self, actions):
        a = make_decimal(actions, "A")
        actions.publish_action(a, "sigma")
        doc = actions.serialize_action_tree(a)
        rebuilt = actions.deserialize_action_tree(doc)
        assert actions.action(rebuilt).link == "sigma"
        assert actions.restore_warnings == []

    def test_link_warning_when_pool_missing(self, actions):
        a = make_decimal(actions, "A")
        actions.publish_action(a, "sigma")
        doc = actions.serialize_action_tree(a)
        fresh = ActionManager()
        rebuilt = fresh.deserialize_action_tree(doc)
        assert fresh.action(rebuilt).link is None
        assert len(fresh.restore_warnings) == 1

    def test_random_trees_round_trip(self, actions):
        rng = np.random.default_rng(11)
        for case in range(100):
            root = _random_tree(actions, rng, depth=0)
            rebuilt = actions.deserialize_action_tree(actions.serialize_action_tree(root))
            assert actions.trees_value_equal(root, rebuilt)


def _random_tree(actions, rng, depth):
    kinds = [ActionKind.DECIMAL, ActionKind.INTEGRAL, ActionKind.STRING, ActionKind.OPTION,
             ActionKind.TOGGLE, ActionKind.TRIGGER, ActionKind.COLOR, ActionKind.COLORMAP_1D,
             ActionKind.DIMENSION_PICKER]
    if depth < 2 and rng.random() < 0.4:
        children = [_random_tree(actions, rng, depth + 1) for _ in range(int(rng.integers(1, 4)))]
        return actions.create_action(ActionKind.GROUP, f"g{int(rng.integers(1e6))}",
                                     children=children)
    kind = kinds[int(rng.integers(len(kinds)))]
    name = f"a{int(rng.integers(1e6))}"
    flags = PermissionFlags(*(bool(rng.integers(2)) for _ in range(5)))
    if kind is ActionKind.DECIMAL:
        lo, hi = sorted(rng.normal(size=2).tolist())
        return actions.create_action(kind, name, flags=flags,
                                     value=float(rng.uniform(lo, hi)), min=lo, max=hi,
                                     step=0.5, decimals=int(rng.integers(0, 5)), suffix="u")
    if kind is ActionKind.INTEGRAL:
        lo, hi = sorted(int(v) for v in rng.integers(-50, 50, size=2))
        return actions.create_action(kind, name, flags=flags,
                                     value=int(rng.integers(lo, hi + 1)), min=lo, max=hi)
    if kind is ActionKind.STRING:
        return actions.create_action(kind, name, flags=flags, value=f"s{int(rng.integers(100))}")
    if kind is ActionKind.OPTION:
        n = int(rng.integers(0, 4))
        return actions.create_action(kind, name, flags=flags,
                                     choices=[f"c{i}" for i in range(n)],
                                     current_index=int(rng.integers(n)) if n else -1)
    if kind is ActionKind.TOGGLE:
        return actions.create_action(kind, name, flags=flags, value=bool(rng.integers(2)))
    if kind is ActionKind.TRIGGER:
        return actions.create_action(kind, name, flags=flags)
    if kind is ActionKind.COLOR:
        return actions.create_action(kind, name, flags=flags,
                                     rgba=tuple(int(v) for v in rng.integers(0, 256, size=4)))
    if kind is ActionKind.COLORMAP_1D:
        maps = ["viridis", "plasma", "grayscale", "coolwarm"]
        return actions.create_action(kind, name, flags=flags,
                                     payload=ColorMapValue(maps[int(rng.integers(4))]))
    return actions.create_action(kind, name, flags=flags,
                                 dataset="d" * 32,
                                 selected=rng.integers(0, 20, size=int(rng.integers(0, 5))).tolist())


class TestPresets:
    def test_save_apply_across_instances(self, actions):
        size1 = make_decimal(actions, "point size", value=0.8)
        root1 = actions.create_action(ActionKind.GROUP, "org.vault.scatterplot", children=[size1])
        size2 = make_decimal(actions, "point size", value=0.1)
        root2 = actions.create_action(ActionKind.GROUP, "org.vault.scatterplot", children=[size2])
        actions.save_preset(root1, "my-look")
        actions.apply_preset(root2, "my-look")
        assert actions.value_of(size2) == pytest.approx(0.8)

    def test_shape_mismatch_refused_atomically(self, actions):
        a = make_decimal(actions, "x", value=0.5)
        root = actions.create_action(ActionKind.GROUP, "plug", children=[a])
        actions.save_preset(root, "p")
        other_child = actions.create_action(ActionKind.TOGGLE, "x", value=False)
        other = actions.create_action(ActionKind.GROUP, "plug", children=[other_child])
        with pytest.raises(ValidationError):
            actions.apply_preset(other, "p")
        assert actions.value_of(other_child) is False

    def test_self_apply_fixed_point(self, actions):
        a = make_decimal(actions, "x", value=0.25)
        root = actions.create_action(ActionKind.GROUP, "plug", children=[a])
        actions.save_preset(root, "p")
        actions.apply_preset(root, "p")
        assert actions.value_of(a) == pytest.approx(0.25)

    def test_unknown_preset(self, actions):
        root = actions.create_action(ActionKind.GROUP, "plug")
        with pytest.raises(NotFoundError):
            actions.apply_preset(root, "missing")
