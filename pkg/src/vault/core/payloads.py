"""Raw data payloads.

A payload owns physical values and nothing else: no name, no hierarchy
position, no selection. Those live on dataset records in the data manager,
which expose payloads to plugins only through views.

Three payload variants exist:

* ``PointPayload`` -- a dense ``num_items x num_dims`` float32 matrix with
  per-dimension names. The workhorse type; images, embeddings, and spectra
  are all point payloads.
* ``ClusterPayload`` -- a list of named, colored clusters, each holding
  sorted member indices into the parent dataset's item space.
* ``ImagePayload`` -- width/height metadata annotating a parent point
  payload whose items are the pixels (row-major, top-left origin, y down).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vault.errors import ShapeError, ValidationError

PayloadKind = str  # "points" | "clusters" | "image"


def _as_index_array(indices, *, what: str) -> np.ndarray:
    arr = np.asarray(indices, dtype=np.int64).ravel()
    if arr.size and arr.min() < 0:
        raise ValidationError(f"{what}: negative index {arr.min()}")
    return arr


@dataclass
class Cluster:
    """One cluster: a name, an RGBA color, and sorted member indices."""

    name: str
    color: tuple[int, int, int, int]
    member_indices: np.ndarray

    def __post_init__(self):
        self.member_indices = _as_index_array(self.member_indices, what="cluster members")
        if self.member_indices.size == 0:
            raise ValidationError(f"cluster {self.name!r} has no members")
        if np.any(np.diff(self.member_indices) <= 0):
            raise ValidationError(f"cluster {self.name!r}: member indices must be strictly increasing")
        if len(self.color) != 4 or any(not (0 <= c <= 255) for c in self.color):
            raise ValidationError(f"cluster {self.name!r}: color must be 4x8-bit RGBA")
        self.color = tuple(int(c) for c in self.color)


class PointPayload:
    """Dense row-major float32 matrix of ``num_items`` x ``num_dims``."""

    kind: PayloadKind = "points"

    def __init__(self, values, dim_names=None, *, num_items=None, num_dims=None):
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim == 1:
            if num_items is None or num_dims is None:
                raise ShapeError("flat values need explicit num_items and num_dims")
            if arr.size != num_items * num_dims:
                raise ShapeError(
                    f"values length {arr.size} != num_items*num_dims = {num_items * num_dims}"
                )
            arr = arr.reshape(num_items, num_dims)
        elif arr.ndim == 2:
            if num_items is not None and arr.shape[0] != num_items:
                raise ShapeError(f"declared num_items {num_items} != {arr.shape[0]}")
            if num_dims is not None and arr.shape[1] != num_dims:
                raise ShapeError(f"declared num_dims {num_dims} != {arr.shape[1]}")
        else:
            raise ShapeError(f"point values must be 1-D or 2-D, got ndim={arr.ndim}")
        if arr.shape[1] < 1:
            raise ShapeError("num_dims must be >= 1")
        self.values = np.ascontiguousarray(arr)
        if dim_names is None:
            dim_names = [f"dim{i}" for i in range(arr.shape[1])]
        dim_names = [str(n) for n in dim_names]
        if len(dim_names) != arr.shape[1]:
            raise ShapeError(f"{len(dim_names)} dim names for {arr.shape[1]} dims")
        self.dim_names = dim_names

    @property
    def num_items(self) -> int:
        return self.values.shape[0]

    @property
    def num_dims(self) -> int:
        return self.values.shape[1]

    def replace_values(self, values, dim_names=None) -> None:
        """Swap in new values with the same item count (dims may change)."""
        new = PointPayload(values, dim_names)
        if new.num_items != self.num_items:
            raise ShapeError(
                f"replacement has {new.num_items} items, payload has {self.num_items}"
            )
        self.values = new.values
        self.dim_names = new.dim_names if dim_names is not None else (
            self.dim_names if new.num_dims == self.num_dims else new.dim_names
        )

    def __repr__(self):
        return f"PointPayload({self.num_items}x{self.num_dims})"


@dataclass
class ClusterPayload:
    """A list of clusters over the parent dataset's item space."""

    clusters: list[Cluster] = field(default_factory=list)
    kind: PayloadKind = field(default="clusters", init=False, repr=False)

    def __post_init__(self):
        self.validate_members(None)

    def validate_members(self, item_count: int | None) -> None:
        """Check disjointness, and bounds when ``item_count`` is known."""
        seen = None
        for cluster in self.clusters:
            if item_count is not None and cluster.member_indices.size:
                top = int(cluster.member_indices[-1])
                if top >= item_count:
                    raise ValidationError(
                        f"cluster {cluster.name!r}: member index {top} >= item count {item_count}"
                    )
            if seen is None:
                seen = cluster.member_indices
            else:
                if np.intersect1d(seen, cluster.member_indices).size:
                    raise ValidationError(
                        f"cluster {cluster.name!r} shares member indices with another cluster"
                    )
                seen = np.union1d(seen, cluster.member_indices)

    def __repr__(self):
        return f"ClusterPayload({len(self.clusters)} clusters)"


@dataclass
class ImagePayload:
    """Pixel extents annotating a parent point payload (one item per pixel)."""

    width: int
    height: int
    kind: PayloadKind = field(default="image", init=False, repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ShapeError(f"image extents must be positive, got {self.width}x{self.height}")

    @property
    def num_items(self) -> int:
        return self.width * self.height


RawPayload = PointPayload | ClusterPayload | ImagePayload
