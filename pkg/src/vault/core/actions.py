"""Typed, serializable GUI parameters ("actions") with runtime linking.

An action is the unit of plugin configuration: a named, typed value with
permission flags, optionally organized into Group trees that serialize to
JSON and persist as presets. Any action can be *published* into a global
pool under a unique public name; actions of the same kind can *connect* to
a pool entry, after which the pool and every connected action hold the
same value at all times.

Synchronization semantics: a direct ``set_value`` first clamps to the
target action's own constraints, then the clamped value replaces the pool
entry and every peer verbatim, in one atomic fan-out (no echo back to the
originator, no cascades). Setting an identical value emits nothing.
Trigger actions synchronize as pulse propagation: firing one fires every
linked peer exactly once.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from vault.colors import COLORMAPS
from vault.core.data import DataManager
from vault.errors import (
    FormatError,
    KindMismatchError,
    NameCollisionError,
    NotFoundError,
    PermissionDeniedError,
    ValidationError,
)
from vault.ids import new_guid

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class ActionKind(Enum):
    DECIMAL = "Decimal"
    INTEGRAL = "Integral"
    STRING = "String"
    OPTION = "Option"
    TOGGLE = "Toggle"
    TRIGGER = "Trigger"
    COLOR = "Color"
    COLORMAP_1D = "ColorMap1D"
    DIMENSION_PICKER = "DimensionPicker"
    GROUP = "Group"


@dataclass
class PermissionFlags:
    enabled: bool = True
    visible: bool = True
    may_publish: bool = True
    may_connect: bool = True
    may_disconnect: bool = True

    def to_json(self) -> dict:
        return {
            "enabled": self.enabled,
            "visible": self.visible,
            "mayPublish": self.may_publish,
            "mayConnect": self.may_connect,
            "mayDisconnect": self.may_disconnect,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PermissionFlags":
        return cls(
            enabled=bool(doc.get("enabled", True)),
            visible=bool(doc.get("visible", True)),
            may_publish=bool(doc.get("mayPublish", True)),
            may_connect=bool(doc.get("mayConnect", True)),
            may_disconnect=bool(doc.get("mayDisconnect", True)),
        )


# -- value payloads --------------------------------------------------------


@dataclass
class DecimalValue:
    value: float = 0.0
    min: float = 0.0
    max: float = 1.0
    step: float = 0.01
    decimals: int = 2
    suffix: str = ""

    def __post_init__(self):
        if self.min > self.max:
            raise ValidationError(f"min {self.min} > max {self.max}")
        self.value = float(min(max(self.value, self.min), self.max))

    def accept(self, new) -> float:
        return float(min(max(float(new), self.min), self.max))

    def to_json(self) -> dict:
        return {"value": self.value, "min": self.min, "max": self.max,
                "step": self.step, "decimals": self.decimals, "suffix": self.suffix}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["value"], doc["min"], doc["max"],
                   doc.get("step", 0.01), doc.get("decimals", 2), doc.get("suffix", ""))


@dataclass
class IntegralValue:
    value: int = 0
    min: int = 0
    max: int = 100

    def __post_init__(self):
        if self.min > self.max:
            raise ValidationError(f"min {self.min} > max {self.max}")
        self.value = int(min(max(self.value, self.min), self.max))

    def accept(self, new) -> int:
        return int(min(max(int(new), self.min), self.max))

    def to_json(self) -> dict:
        return {"value": self.value, "min": self.min, "max": self.max}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["value"], doc["min"], doc["max"])


@dataclass
class StringValue:
    value: str = ""

    def accept(self, new) -> str:
        return str(new)

    def to_json(self) -> dict:
        return {"value": self.value}

    @classmethod
    def from_json(cls, doc):
        return cls(doc.get("value", ""))


@dataclass
class OptionValue:
    choices: list[str] = field(default_factory=list)
    current_index: int = -1

    def __post_init__(self):
        self.choices = [str(c) for c in self.choices]
        if not self.choices:
            self.current_index = -1
        elif not 0 <= self.current_index < len(self.choices):
            raise ValidationError(
                f"option index {self.current_index} out of range for {len(self.choices)} choices")

    def accept(self, new) -> int:
        if not self.choices:
            return -1
        return int(min(max(int(new), 0), len(self.choices) - 1))

    @property
    def value(self):
        return self.current_index

    def current(self) -> Optional[str]:
        return None if self.current_index < 0 else self.choices[self.current_index]

    def to_json(self) -> dict:
        return {"choices": list(self.choices), "currentIndex": self.current_index}

    @classmethod
    def from_json(cls, doc):
        return cls(list(doc.get("choices", [])), doc.get("currentIndex", -1))


@dataclass
class ToggleValue:
    value: bool = False

    def accept(self, new) -> bool:
        return bool(new)

    def to_json(self) -> dict:
        return {"value": self.value}

    @classmethod
    def from_json(cls, doc):
        return cls(bool(doc.get("value", False)))


@dataclass
class TriggerValue:
    """Stateless; a trigger only fires."""

    def to_json(self) -> dict:
        return {}

    @classmethod
    def from_json(cls, doc):
        return cls()


@dataclass
class ColorValue:
    rgba: tuple = (0, 0, 0, 255)

    def __post_init__(self):
        self.rgba = self.accept(self.rgba)

    def accept(self, new) -> tuple:
        rgba = tuple(int(c) for c in new)
        if len(rgba) != 4 or any(not 0 <= c <= 255 for c in rgba):
            raise ValidationError(f"not an RGBA 8-bit color: {new!r}")
        return rgba

    @property
    def value(self):
        return self.rgba

    def to_json(self) -> dict:
        return {"rgba": list(self.rgba)}

    @classmethod
    def from_json(cls, doc):
        return cls(tuple(doc["rgba"]))


@dataclass
class ColorMapValue:
    name: str = "viridis"

    def __post_init__(self):
        self.name = self.accept(self.name)

    def accept(self, new) -> str:
        name = str(new)
        if name not in COLORMAPS:
            raise ValidationError(f"unknown colormap {name!r}; built-ins: {COLORMAPS}")
        return name

    @property
    def value(self):
        return self.name

    def to_json(self) -> dict:
        return {"name": self.name}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["name"])


@dataclass
class DimensionPickerValue:
    dataset: str = ""
    selected: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.selected = sorted({int(i) for i in self.selected})

    def accept(self, new) -> dict:
        if isinstance(new, dict):
            return {"dataset": str(new.get("dataset", self.dataset)),
                    "selected": sorted({int(i) for i in new.get("selected", [])})}
        return {"dataset": self.dataset, "selected": sorted({int(i) for i in new})}

    @property
    def value(self):
        return {"dataset": self.dataset, "selected": list(self.selected)}

    def to_json(self) -> dict:
        return {"dataset": self.dataset, "selected": list(self.selected)}

    @classmethod
    def from_json(cls, doc):
        return cls(doc.get("dataset", ""), list(doc.get("selected", [])))


_PAYLOAD_TYPES = {
    ActionKind.DECIMAL: DecimalValue,
    ActionKind.INTEGRAL: IntegralValue,
    ActionKind.STRING: StringValue,
    ActionKind.OPTION: OptionValue,
    ActionKind.TOGGLE: ToggleValue,
    ActionKind.TRIGGER: TriggerValue,
    ActionKind.COLOR: ColorValue,
    ActionKind.COLORMAP_1D: ColorMapValue,
    ActionKind.DIMENSION_PICKER: DimensionPickerValue,
}


@dataclass
class Action:
    id: str
    name: str
    kind: ActionKind
    payload: object  # kind-specific value dataclass, None for Group
    flags: PermissionFlags = field(default_factory=PermissionFlags)
    children: list[str] = field(default_factory=list)
    link: Optional[str] = None  # public pool name
    parent: Optional[str] = None

    @property
    def value(self):
        return None if self.payload is None else self.payload.value


@dataclass
class PoolEntry:
    id: str
    public_name: str
    kind: ActionKind
    payload: object
    subscribers: set = field(default_factory=set)


@dataclass(frozen=True)
class ActionChange:
    """One observable notification: an action value, pool value, or trigger pulse."""

    scope: str  # "action" | "pool" | "trigger"
    target: str  # action id, or public pool name


Observer = Callable[[ActionChange], None]


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-") or "unnamed"


class ActionManager:
    def __init__(self, data: Optional[DataManager] = None,
                 preset_dir: Optional[Path] = None):
        self._data = data
        self._actions: dict[str, Action] = {}
        self._pool: dict[str, PoolEntry] = {}
        self._observers: list[Observer] = []
        self.preset_dir = Path(preset_dir) if preset_dir else Path.home() / ".vault" / "presets"
        self.restore_warnings: list[str] = []

    # -- lookup ----------------------------------------------------------

    def action(self, action_id: str) -> Action:
        try:
            return self._actions[action_id]
        except KeyError:
            raise NotFoundError(f"unknown action {action_id}") from None

    def pool_entry(self, public_name: str) -> PoolEntry:
        try:
            return self._pool[public_name]
        except KeyError:
            raise NotFoundError(f"no published parameter named {public_name!r}") from None

    def pool_names(self) -> list[str]:
        return sorted(self._pool)

    def value_of(self, action_id: str):
        return self.action(action_id).value

    def reset(self) -> None:
        """Drop every action and pool entry (session replacement)."""
        self._actions.clear()
        self._pool.clear()
        self.restore_warnings = []

    def add_observer(self, observer: Observer) -> None:
        self._observers.append(observer)

    def remove_observer(self, observer: Observer) -> None:
        if observer in self._observers:
            self._observers.remove(observer)

    def _notify(self, scope: str, target: str) -> None:
        self._emit(ActionChange(scope, target))

    # -- creation --------------------------------------------------------

    def create_action(self, kind: ActionKind, name: str,
                      flags: Optional[PermissionFlags] = None,
                      children: Optional[list[str]] = None,
                      payload: object = None,
                      **payload_fields) -> str:
        """Create an action; payload fields go to the kind's value type.

        A ready-made payload object can be passed instead of fields, which
        avoids keyword clashes (the ColorMap1D payload has a ``name`` field).
        """
        if kind is ActionKind.GROUP:
            if payload_fields or payload is not None:
                raise ValidationError("group actions carry no value payload")
        else:
            if children:
                raise ValidationError("only Group actions may have children")
            if payload is None:
                payload = _PAYLOAD_TYPES[kind](**payload_fields)
            elif not isinstance(payload, _PAYLOAD_TYPES[kind]):
                raise KindMismatchError(
                    f"payload {type(payload).__name__} does not fit {kind.value}")
        action = Action(id=new_guid(), name=name, kind=kind, payload=payload,
                        flags=flags or PermissionFlags())
        self._actions[action.id] = action
        for child_id in children or []:
            self.add_child(action.id, child_id)
        return action.id

    def add_child(self, group_id: str, child_id: str) -> None:
        group = self.action(group_id)
        child = self.action(child_id)
        if group.kind is not ActionKind.GROUP:
            raise ValidationError("only Group actions may have children")
        if child.parent is not None:
            raise ValidationError(f"action {child.name!r} already has a parent")
        if group_id in self._subtree_ids(child_id):
            raise ValidationError("cycle in action tree")
        group.children.append(child_id)
        child.parent = group_id

    def _subtree_ids(self, root_id: str) -> list[str]:
        out = [root_id]
        for child in self.action(root_id).children:
            out.extend(self._subtree_ids(child))
        return out

    def remove_tree(self, root_id: str) -> None:
        """Delete an action subtree, disconnecting (not unpublishing) links."""
        for node_id in self._subtree_ids(root_id):
            node = self._actions.get(node_id)
            if node is None:
                continue
            if node.link is not None:
                entry = self._pool.get(node.link)
                if entry is not None:
                    entry.subscribers.discard(node_id)
                node.link = None
            del self._actions[node_id]

    def attach_to_dataset(self, action_id: str, dataset_id: str) -> None:
        """Expose an action on a dataset record for other plugins to surface."""
        if self._data is None:
            raise ValidationError("no data manager wired; cannot attach")
        self.action(action_id)
        rec = self._data.record(dataset_id)
        if action_id not in rec.attached_actions:
            rec.attached_actions.append(action_id)

    # -- values ----------------------------------------------------------

    def set_value(self, action_id: str, new_value) -> None:
        """Clamp and store a value; synchronize pool and peers atomically."""
        action = self.action(action_id)
        if action.kind in (ActionKind.GROUP, ActionKind.TRIGGER):
            raise KindMismatchError(f"{action.kind.value} actions have no settable value")
        try:
            accepted = action.payload.accept(new_value)
        except (TypeError, ValueError) as exc:
            raise KindMismatchError(
                f"value {new_value!r} does not fit a {action.kind.value} action") from exc
        if accepted == action.payload.value:
            return
        self._store(action, accepted)
        self._fan_out(action)

    def _fan_out(self, action: Action) -> None:
        """Propagate a committed change to the pool and peers, then notify.

        The whole fan-out is applied before any observer runs, so no
        observer ever sees a half-synchronized pool.
        """
        changes = [ActionChange("action", action.id)]
        if action.link is not None:
            entry = self._pool[action.link]
            entry.payload = copy.deepcopy(action.payload)
            changes.append(ActionChange("pool", entry.public_name))
            for peer_id in sorted(entry.subscribers):
                if peer_id == action.id:
                    continue
                peer = self._actions[peer_id]
                if peer.payload.value != action.payload.value:
                    self._store(peer, action.payload.value)
                    changes.append(ActionChange("action", peer_id))
        for change in changes:
            self._emit(change)

    def _emit(self, change: ActionChange) -> None:
        for observer in list(self._observers):
            try:
                observer(change)
            except Exception:
                logger.exception("action observer failed for %s", change)

    def _store(self, action: Action, accepted) -> None:
        payload = action.payload
        if isinstance(payload, OptionValue):
            payload.current_index = accepted
        elif isinstance(payload, ColorValue):
            payload.rgba = accepted
        elif isinstance(payload, ColorMapValue):
            payload.name = accepted
        elif isinstance(payload, DimensionPickerValue):
            payload.dataset = accepted["dataset"]
            payload.selected = list(accepted["selected"])
        else:
            payload.value = accepted

    def fire_trigger(self, action_id: str) -> None:
        """Fire a trigger; linked peers pulse exactly once each."""
        action = self.action(action_id)
        if action.kind is not ActionKind.TRIGGER:
            raise KindMismatchError(f"{action.kind.value} is not a trigger")
        self._notify("trigger", action_id)
        if action.link is not None:
            for peer_id in sorted(self._pool[action.link].subscribers):
                if peer_id != action_id:
                    self._notify("trigger", peer_id)

    # -- pool ------------------------------------------------------------

    def publish_action(self, action_id: str, public_name: str) -> str:
        """Copy an action's value into the pool; the action subscribes to it."""
        action = self.action(action_id)
        if action.kind is ActionKind.GROUP:
            raise ValidationError("group actions cannot be published")
        if not action.flags.may_publish:
            raise PermissionDeniedError(f"action {action.name!r} may not publish")
        if public_name in self._pool:
            raise NameCollisionError(f"public name {public_name!r} already taken")
        if action.link is not None:
            raise ValidationError(f"action {action.name!r} is already linked")
        entry = PoolEntry(id=new_guid(), public_name=public_name, kind=action.kind,
                          payload=copy.deepcopy(action.payload), subscribers={action_id})
        self._pool[public_name] = entry
        action.link = public_name
        return entry.id

    def connect_action(self, action_id: str, public_name: str) -> None:
        """Subscribe an action to a pool entry; the pool value is adopted."""
        action = self.action(action_id)
        entry = self.pool_entry(public_name)
        if action.kind is not entry.kind:
            raise KindMismatchError(
                f"cannot connect {action.kind.value} to {entry.kind.value} entry {public_name!r}")
        if not action.flags.may_connect:
            raise PermissionDeniedError(f"action {action.name!r} may not connect")
        if action.link is not None:
            raise ValidationError(f"action {action.name!r} is already linked")
        self._adopt(action, entry)
        entry.subscribers.add(action_id)
        action.link = public_name

    def _adopt(self, action: Action, entry: PoolEntry) -> None:
        if action.kind is ActionKind.TRIGGER:
            return
        if action.payload.value != entry.payload.value:
            self._store(action, entry.payload.value)
            self._notify("action", action.id)

    def disconnect_action(self, action_id: str) -> None:
        """Sever the pool link; the last synchronized value is retained."""
        action = self.action(action_id)
        if action.link is None:
            raise ValidationError(f"action {action.name!r} is not linked")
        if not action.flags.may_disconnect:
            raise PermissionDeniedError(f"action {action.name!r} may not disconnect")
        self._pool[action.link].subscribers.discard(action_id)
        action.link = None

    def force_disconnect(self, action_id: str) -> None:
        """Teardown path: sever a link regardless of permission flags."""
        action = self.action(action_id)
        if action.link is None:
            return
        entry = self._pool.get(action.link)
        if entry is not None:
            entry.subscribers.discard(action_id)
        action.link = None

    def restore_pool_entry(self, public_name: str, kind: ActionKind, value_doc: dict) -> str:
        """Recreate a pool entry from persisted state (no publisher needed)."""
        if public_name in self._pool:
            raise NameCollisionError(f"public name {public_name!r} already taken")
        payload = _PAYLOAD_TYPES[kind].from_json(value_doc)
        entry = PoolEntry(id=new_guid(), public_name=public_name, kind=kind, payload=payload)
        self._pool[public_name] = entry
        return entry.id

    def restore_link(self, action_id: str, public_name: str) -> None:
        """Re-establish a persisted link, bypassing permission flags."""
        action = self.action(action_id)
        entry = self._pool.get(public_name)
        if entry is None or entry.kind is not action.kind:
            why = "missing" if entry is None else "kind-mismatched"
            message = f"link target {public_name!r} is {why}; {action.name!r} restored unlinked"
            self.restore_warnings.append(message)
            logger.warning(message)
            return
        if action.link is not None:
            return
        self._adopt(action, entry)
        entry.subscribers.add(action_id)
        action.link = public_name

    # -- serialization ---------------------------------------------------

    def serialize_action_tree(self, root_id: str, *, include_links: bool = True,
                              include_ids: bool = False) -> dict:
        """Lossless JSON document for an action subtree."""
        return {"formatVersion": FORMAT_VERSION,
                "action": self._node_to_json(self.action(root_id), include_links, include_ids)}

    def _node_to_json(self, action: Action, include_links: bool, include_ids: bool) -> dict:
        node = {
            "kind": action.kind.value,
            "name": action.name,
            "flags": action.flags.to_json(),
            "value": None if action.payload is None else action.payload.to_json(),
            "link": action.link if include_links else None,
            "children": [self._node_to_json(self._actions[c], include_links, include_ids)
                         for c in action.children],
        }
        if include_ids:
            node["id"] = action.id
        return node

    def deserialize_action_tree(self, doc: dict) -> str:
        """Rebuild an action tree from a document; returns the new root id."""
        if not isinstance(doc, dict) or "action" not in doc:
            raise FormatError("not an action-tree document")
        if doc.get("formatVersion") != FORMAT_VERSION:
            raise FormatError(f"unsupported action formatVersion {doc.get('formatVersion')!r}")
        self.restore_warnings = []
        return self._node_from_json(doc["action"])

    def _node_from_json(self, node: dict) -> str:
        try:
            kind = ActionKind(node["kind"])
        except (KeyError, ValueError):
            raise FormatError(f"unknown action kind {node.get('kind')!r}") from None
        flags = PermissionFlags.from_json(node.get("flags", {}))
        if kind is ActionKind.GROUP:
            action_id = self.create_action(kind, node.get("name", ""), flags=flags)
        else:
            try:
                payload = _PAYLOAD_TYPES[kind].from_json(node.get("value") or {})
            except (KeyError, TypeError, ValidationError) as exc:
                raise FormatError(f"malformed {kind.value} value payload: {exc}") from exc
            action = Action(id=new_guid(), name=node.get("name", ""), kind=kind,
                            payload=payload, flags=flags)
            self._actions[action.id] = action
            action_id = action.id
        for child_node in node.get("children", []):
            self.add_child(action_id, self._node_from_json(child_node))
        link = node.get("link")
        if link:
            self.restore_link(action_id, link)
        return action_id

    def trees_value_equal(self, a_id: str, b_id: str) -> bool:
        """Structural + value + flags equality of two trees (ids ignored)."""
        a, b = self.action(a_id), self.action(b_id)
        if (a.kind, a.name, a.flags, a.payload) != (b.kind, b.name, b.flags, b.payload):
            return False
        if len(a.children) != len(b.children):
            return False
        return all(self.trees_value_equal(x, y) for x, y in zip(a.children, b.children))

    # -- presets ---------------------------------------------------------

    def _preset_path(self, namespace: str, preset_name: str) -> Path:
        return self.preset_dir / _slug(namespace) / f"{_slug(preset_name)}.json"

    def save_preset(self, root_id: str, preset_name: str) -> Path:
        """Persist a tree's values and flags, keyed by root name + preset name."""
        root = self.action(root_id)
        path = self._preset_path(root.name, preset_name)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = self.serialize_action_tree(root_id, include_links=False)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
        return path

    def apply_preset(self, root_id: str, preset_name: str) -> None:
        """Overwrite values and flags from a preset; structure must match."""
        root = self.action(root_id)
        path = self._preset_path(root.name, preset_name)
        if not path.exists():
            raise NotFoundError(f"no preset {preset_name!r} for {root.name!r}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("formatVersion") != FORMAT_VERSION:
            raise FormatError(f"unsupported preset version {doc.get('formatVersion')!r}")
        self.apply_tree_values(root_id, doc["action"])

    def apply_tree_values(self, root_id: str, node: dict) -> None:
        """Overwrite a tree's values and flags from a serialized node.

        The shapes (kinds at every path, child counts) must match; a
        mismatch refuses the whole application before any mutation.
        """
        plan: list[tuple[Action, object, PermissionFlags]] = []
        self._plan_preset(root_id, node, plan)  # validates; raises before applying
        for action, payload, flags in plan:
            action.flags = flags
            if payload is not None and payload.to_json() != action.payload.to_json():
                action.payload = payload
                self._fan_out(action)

    def _plan_preset(self, action_id: str, node: dict, plan: list) -> None:
        action = self.action(action_id)
        if action.kind.value != node.get("kind"):
            raise ValidationError(
                f"preset shape mismatch at {action.name!r}: "
                f"{node.get('kind')!r} vs {action.kind.value}")
        if len(action.children) != len(node.get("children", [])):
            raise ValidationError(f"preset shape mismatch at {action.name!r}: child count")
        payload = None
        if action.kind not in (ActionKind.GROUP, ActionKind.TRIGGER):
            try:
                payload = _PAYLOAD_TYPES[action.kind].from_json(node.get("value") or {})
            except (KeyError, TypeError, ValidationError) as exc:
                raise FormatError(f"malformed preset payload at {action.name!r}: {exc}") from exc
        plan.append((action, payload, PermissionFlags.from_json(node.get("flags", {}))))
        for child_id, child_node in zip(action.children, node.get("children", [])):
            self._plan_preset(child_id, child_node, plan)

    def list_presets(self, namespace: str) -> list[str]:
        folder = self.preset_dir / _slug(namespace)
        if not folder.is_dir():
            return []
        return sorted(p.stem for p in folder.glob("*.json"))
