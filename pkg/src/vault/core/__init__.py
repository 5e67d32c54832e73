from vault.core.payloads import Cluster, ClusterPayload, ImagePayload, PointPayload
from vault.core.events import CoreEvent, EventBus, EventFilter, EventKind
from vault.core.data import DataManager, DatasetGroup, DatasetRecord, SelectionSet

__all__ = [
    "Cluster",
    "ClusterPayload",
    "ImagePayload",
    "PointPayload",
    "CoreEvent",
    "EventBus",
    "EventFilter",
    "EventKind",
    "DataManager",
    "DatasetGroup",
    "DatasetRecord",
    "SelectionSet",
]
