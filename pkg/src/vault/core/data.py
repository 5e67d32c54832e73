"""Dataset hierarchy, selection sharing, and group synchronization.

The data manager is the single source of truth for all raw payloads and
dataset records. Records are views: a record never copies payload values.
Three relationships exist between a record and its parent:

* **added child** (``add_dataset`` with a parent): a new root payload with
  its own fresh selection, placed under the parent for organization. Image
  annotations are added this way.
* **subset** (``create_subset``): shares the source's payload *and*
  selection object, storing only row indices.
* **derived** (``derive_dataset``): owns a new payload but shares the
  source's selection object, so brushing an embedding highlights the
  source items (and vice versa).

Selections always live in the item space of the selection-owning root
payload. Each record carries an optional ``raw_map`` translating its local
item indices to that space (``None`` means identity). Derived datasets
whose item count differs from the source cannot share a selection; they
get a fresh one and must be linked through groups instead.

Grouped datasets of equal item count synchronize selections by copying
*local* indices to every member, since members may sit over unrelated
payloads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from vault.core.events import EventBus, EventKind
from vault.core.payloads import (
    ClusterPayload,
    ImagePayload,
    PointPayload,
    RawPayload,
)
from vault.errors import NotFoundError, ShapeError, ValidationError
from vault.ids import new_guid


class SelectionSet:
    """The single authoritative set of selected indices for one root payload."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.indices = np.empty(0, dtype=np.int64)

    def replace(self, indices: np.ndarray) -> bool:
        """Replace contents; returns False when nothing changed."""
        if np.array_equal(indices, self.indices):
            return False
        self.indices = indices
        return True


@dataclass
class DatasetGroup:
    id: str
    member_ids: list[str]


@dataclass
class DatasetRecord:
    id: str
    name: str
    payload: RawPayload
    selection: SelectionSet
    parent: Optional[str] = None
    derived: bool = False
    # Row indices into `payload` for subset views (None = all rows).
    rows: Optional[np.ndarray] = None
    # Local item index -> selection-owner raw index (None = identity).
    raw_map: Optional[np.ndarray] = None
    group_id: Optional[str] = None
    attached_actions: list[str] = field(default_factory=list)
    properties: dict[str, str] = field(default_factory=dict)
    children: list[str] = field(default_factory=list)

    @property
    def subset_indices(self) -> Optional[np.ndarray]:
        """The spec-level mapping field: raw-space indices, None for identity."""
        return self.raw_map


def _clean_indices(indices, bound: int, *, what: str) -> np.ndarray:
    """Validate, dedupe, and sort a local index list."""
    arr = np.unique(np.asarray(indices, dtype=np.int64).ravel())
    if arr.size:
        if arr[0] < 0:
            raise ValidationError(f"{what}: negative index {arr[0]}")
        if arr[-1] >= bound:
            raise ValidationError(f"{what}: index {arr[-1]} out of range (count {bound})")
    return arr


class DataManager:
    def __init__(self, bus: EventBus):
        self._bus = bus
        self._records: dict[str, DatasetRecord] = {}
        self._groups: dict[str, DatasetGroup] = {}

    # -- lookup ----------------------------------------------------------

    def record(self, dataset_id: str) -> DatasetRecord:
        try:
            return self._records[dataset_id]
        except KeyError:
            raise NotFoundError(f"unknown dataset {dataset_id}") from None

    def __contains__(self, dataset_id: str) -> bool:
        return dataset_id in self._records

    def ids(self) -> list[str]:
        return list(self._records)

    def records(self) -> list[DatasetRecord]:
        """All records in creation order."""
        return list(self._records.values())

    def roots(self) -> list[DatasetRecord]:
        return [r for r in self._records.values() if r.parent is None]

    def group(self, group_id: str) -> DatasetGroup:
        try:
            return self._groups[group_id]
        except KeyError:
            raise NotFoundError(f"unknown group {group_id}") from None

    def groups(self) -> list[DatasetGroup]:
        return list(self._groups.values())

    def find_by_name(self, name: str) -> Optional[DatasetRecord]:
        """First record with the given name, in creation order."""
        for rec in self._records.values():
            if rec.name == name:
                return rec
        return None

    def effective_count(self, dataset_id: str) -> int:
        """Number of items in the record's local index space."""
        rec = self.record(dataset_id)
        if rec.raw_map is not None:
            return len(rec.raw_map)
        if rec.rows is not None:
            return len(rec.rows)
        if isinstance(rec.payload, PointPayload):
            return rec.payload.num_items
        if isinstance(rec.payload, ImagePayload):
            return rec.payload.num_items
        # Cluster payloads index the parent's item space.
        if rec.parent is None:
            raise ValidationError(f"cluster dataset {rec.name!r} has no parent")
        return self.effective_count(rec.parent)

    def selection_object(self, dataset_id: str) -> SelectionSet:
        """The selection object a record reads and writes (identity-comparable)."""
        return self.record(dataset_id).selection

    # -- creation --------------------------------------------------------

    def add_dataset(self, payload: RawPayload, name: str,
                    parent: Optional[str] = None, *, guid: Optional[str] = None) -> str:
        """Register a new root payload (optionally placed under a parent)."""
        parent_rec = self.record(parent) if parent is not None else None
        if isinstance(payload, ImagePayload):
            if parent_rec is None:
                raise ValidationError("image payloads annotate a parent dataset")
            want = self.effective_count(parent_rec.id)
            if payload.num_items != want:
                raise ShapeError(
                    f"image {payload.width}x{payload.height} = {payload.num_items} pixels "
                    f"!= parent item count {want}"
                )
            capacity = payload.num_items
        elif isinstance(payload, ClusterPayload):
            if parent_rec is None:
                raise ValidationError("cluster payloads require a parent dataset")
            capacity = self.effective_count(parent_rec.id)
            payload.validate_members(capacity)
        else:
            capacity = payload.num_items
        rec = DatasetRecord(
            id=guid or new_guid(),
            name=name,
            payload=payload,
            selection=SelectionSet(capacity),
            parent=parent,
        )
        self._register(rec, parent_rec)
        return rec.id

    def derive_dataset(self, source: str, name: str, payload: RawPayload,
                       *, guid: Optional[str] = None) -> str:
        """Register a derived dataset: own payload, shared selection object."""
        src = self.record(source)
        src_count = self.effective_count(source)
        src_map = self._effective_map(src)
        if isinstance(payload, ImagePayload):
            raise ValidationError("image annotations are added as children, not derived")
        if isinstance(payload, ClusterPayload):
            payload.validate_members(src_count)
            selection = src.selection
            raw_map = None if src_map is None else src_map.copy()
        elif payload.num_items == src_count:
            selection = src.selection
            raw_map = None if src_map is None else src_map.copy()
        else:
            # Item counts differ: selection sharing is undefined, use groups.
            selection = SelectionSet(payload.num_items)
            raw_map = None
        rec = DatasetRecord(
            id=guid or new_guid(),
            name=name,
            payload=payload,
            selection=selection,
            parent=source,
            derived=True,
            raw_map=raw_map,
        )
        self._register(rec, src)
        return rec.id

    def create_subset(self, source: str, indices, name: str,
                      *, guid: Optional[str] = None) -> str:
        """Register an index-only view sharing the source payload and selection."""
        src = self.record(source)
        if not isinstance(src.payload, PointPayload):
            raise ValidationError("subsets require a point-backed source dataset")
        local = _clean_indices(indices, self.effective_count(source), what="subset indices")
        if local.size == 0:
            raise ValidationError("empty subsets are rejected")
        rows = local if src.rows is None else src.rows[local]
        src_map = self._effective_map(src)
        raw_map = local if src_map is None else src_map[local]
        rec = DatasetRecord(
            id=guid or new_guid(),
            name=name,
            payload=src.payload,  # shared by reference, never copied
            selection=src.selection,
            parent=source,
            rows=rows,
            raw_map=raw_map,
        )
        self._register(rec, src)
        return rec.id

    def _effective_map(self, rec: DatasetRecord) -> Optional[np.ndarray]:
        # Shared-selection records with a non-identity mapping store it at
        # creation time; everything else maps identically into its selection.
        return rec.raw_map

    def _register(self, rec: DatasetRecord, parent_rec: Optional[DatasetRecord]) -> None:
        self._records[rec.id] = rec
        if parent_rec is not None:
            parent_rec.children.append(rec.id)
        self._bus.publish(EventKind.ADDED, rec.id)

    # -- selections ------------------------------------------------------

    def set_selection(self, dataset_id: str, local_indices) -> None:
        """Replace the shared selection; propagates to the record's group."""
        rec = self.record(dataset_id)
        local = _clean_indices(local_indices, self.effective_count(dataset_id),
                               what="selection indices")
        changed = self._apply_selection(rec, local)
        if rec.group_id is not None:
            for member_id in self.group(rec.group_id).member_ids:
                if member_id == dataset_id:
                    continue
                changed |= self._apply_selection(self.record(member_id), local)
        for sel in changed:
            self._emit_selection_changed(sel)

    def _apply_selection(self, rec: DatasetRecord, local: np.ndarray) -> set:
        raw_map = self._effective_map(rec)
        raw = local if raw_map is None else np.sort(raw_map[local])
        if rec.selection.replace(raw):
            return {rec.selection}
        return set()

    def _emit_selection_changed(self, selection: SelectionSet) -> None:
        for rec in self._records.values():
            if rec.selection is selection:
                self._bus.publish(EventKind.SELECTION_CHANGED, rec.id)

    def get_selection(self, dataset_id: str) -> np.ndarray:
        """The shared selection mapped into the record's local space, sorted."""
        rec = self.record(dataset_id)
        raw = rec.selection.indices
        raw_map = self._effective_map(rec)
        if raw_map is None:
            return raw.copy()
        return np.flatnonzero(np.isin(raw_map, raw)).astype(np.int64)

    # -- groups ----------------------------------------------------------

    def group_datasets(self, ids: Iterable[str]) -> str:
        ids = list(ids)
        if len(ids) < 2:
            raise ValidationError("a group needs at least two datasets")
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate dataset in group")
        counts = {i: self.effective_count(i) for i in ids}
        if len(set(counts.values())) != 1:
            raise ValidationError(f"grouped datasets must have equal item counts, got {counts}")
        for i in ids:
            if self.record(i).group_id is not None:
                raise ValidationError(f"dataset {i} is already grouped")
        group = DatasetGroup(id=new_guid(), member_ids=ids)
        self._groups[group.id] = group
        for i in ids:
            self.record(i).group_id = group.id
        return group.id

    # -- mutation --------------------------------------------------------

    def rename_dataset(self, dataset_id: str, name: str) -> None:
        self.record(dataset_id).name = name
        self._bus.publish(EventKind.RENAMED, dataset_id)

    def remove_dataset(self, dataset_id: str) -> None:
        """Remove a record and its whole subtree, children first."""
        rec = self.record(dataset_id)
        if rec.parent is not None and rec.parent in self._records:
            self.record(rec.parent).children.remove(dataset_id)
        for node_id in self._postorder(dataset_id):
            node = self._records.pop(node_id)
            self._ungroup(node)
            self._bus.publish(EventKind.REMOVED, node_id)

    def _postorder(self, dataset_id: str) -> list[str]:
        out = []
        for child in self.record(dataset_id).children:
            out.extend(self._postorder(child))
        out.append(dataset_id)
        return out

    def _ungroup(self, rec: DatasetRecord) -> None:
        if rec.group_id is None:
            return
        group = self._groups.get(rec.group_id)
        rec.group_id = None
        if group is None:
            return
        group.member_ids.remove(rec.id)
        if len(group.member_ids) < 2:
            for member_id in group.member_ids:
                self._records[member_id].group_id = None
            del self._groups[group.id]

    def set_point_values(self, dataset_id: str, values, dim_names=None) -> None:
        """Overwrite a point payload's values in place (item count fixed)."""
        rec = self.record(dataset_id)
        if not isinstance(rec.payload, PointPayload):
            raise ValidationError(f"dataset {rec.name!r} is not point data")
        if rec.rows is not None:
            raise ValidationError("subsets are views; write to the owning dataset")
        rec.payload.replace_values(values, dim_names)
        self._bus.publish(EventKind.DATA_CHANGED, dataset_id)

    def set_clusters(self, dataset_id: str, clusters) -> None:
        """Replace a cluster payload's cluster list."""
        rec = self.record(dataset_id)
        if not isinstance(rec.payload, ClusterPayload):
            raise ValidationError(f"dataset {rec.name!r} is not cluster data")
        new = ClusterPayload(list(clusters))
        new.validate_members(self.effective_count(dataset_id))
        rec.payload.clusters = new.clusters
        self._bus.publish(EventKind.DATA_CHANGED, dataset_id)

    def set_property(self, dataset_id: str, key: str, value: str) -> None:
        self.record(dataset_id).properties[str(key)] = str(value)

    # -- views -----------------------------------------------------------

    def get_data_view(self, dataset_id: str, dims=None, items=None) -> np.ndarray:
        """A dense float32 copy of the effective (subset-resolved) point data."""
        rec = self.record(dataset_id)
        if isinstance(rec.payload, ImagePayload):
            # Image annotations expose the parent's pixel values.
            return self.get_data_view(rec.parent, dims=dims, items=items)
        if not isinstance(rec.payload, PointPayload):
            raise ValidationError(f"dataset {rec.name!r} has no dense values")
        eff = rec.payload.values if rec.rows is None else rec.payload.values[rec.rows]
        if items is None:
            item_idx = np.arange(eff.shape[0])
        else:
            item_idx = np.asarray(items, dtype=np.int64).ravel()
            if item_idx.size and (item_idx.min() < 0 or item_idx.max() >= eff.shape[0]):
                raise ValidationError("item index out of range")
        if dims is None:
            dim_idx = np.arange(eff.shape[1])
        else:
            dim_idx = np.asarray(dims, dtype=np.int64).ravel()
            if dim_idx.size and (dim_idx.min() < 0 or dim_idx.max() >= eff.shape[1]):
                raise ValidationError("dimension index out of range")
        return np.ascontiguousarray(eff[np.ix_(item_idx, dim_idx)], dtype=np.float32)

    def dim_names(self, dataset_id: str) -> list[str]:
        rec = self.record(dataset_id)
        if isinstance(rec.payload, ImagePayload):
            return self.dim_names(rec.parent)
        if not isinstance(rec.payload, PointPayload):
            raise ValidationError(f"dataset {rec.name!r} has no dimensions")
        return list(rec.payload.dim_names)
