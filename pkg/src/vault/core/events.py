"""Publish-subscribe dispatch of dataset lifecycle notifications.

The bus delivers five event kinds (added, data changed, selection changed,
removed, renamed), each carrying a dataset id and a bus-assigned, strictly
increasing sequence number. Subscribers register a handler with an optional
filter on kinds and/or dataset ids.

Dispatch is synchronous and runs in registration order. A handler that
publishes again does not see its event delivered recursively: re-entrant
publishes are queued and dispatched after the current delivery completes.
The set of matching subscribers is captured when an event is published;
a subscriber that unsubscribes before a queued event is delivered will not
receive it (no delivery after unsubscribe).

Handlers must be fast and non-blocking; long work belongs on a worker that
the subscriber schedules itself. A raising handler is logged and skipped so
one broken plugin cannot wedge core mutations.
"""

from __future__ import annotations

import itertools
import logging
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional

logger = logging.getLogger(__name__)


class EventKind(Enum):
    ADDED = "DatasetAdded"
    DATA_CHANGED = "DatasetDataChanged"
    SELECTION_CHANGED = "DatasetSelectionChanged"
    REMOVED = "DatasetRemoved"
    RENAMED = "DatasetRenamed"


@dataclass(frozen=True)
class CoreEvent:
    kind: EventKind
    dataset: str
    seq: int


@dataclass(frozen=True)
class EventFilter:
    """Matches iff kind is in ``kinds`` and dataset in ``datasets`` (absent = all)."""

    kinds: Optional[frozenset] = None
    datasets: Optional[frozenset] = None

    @classmethod
    def of(cls, kinds: Iterable[EventKind] | None = None,
           datasets: Iterable[str] | None = None) -> "EventFilter":
        return cls(
            kinds=frozenset(kinds) if kinds is not None else None,
            datasets=frozenset(datasets) if datasets is not None else None,
        )

    def matches(self, event: CoreEvent) -> bool:
        if self.kinds is not None and event.kind not in self.kinds:
            return False
        if self.datasets is not None and event.dataset not in self.datasets:
            return False
        return True


MATCH_ALL = EventFilter()

Handler = Callable[[CoreEvent], None]


class EventBus:
    def __init__(self):
        self._lock = threading.RLock()
        self._subs: dict[int, tuple[EventFilter, Handler]] = {}
        self._sub_ids = itertools.count(1)
        self._seq = itertools.count(1)
        self._queue: deque[tuple[CoreEvent, list[int]]] = deque()
        self._dispatching = False

    def subscribe(self, handler: Handler, filter: EventFilter = MATCH_ALL) -> int:
        with self._lock:
            sub_id = next(self._sub_ids)
            self._subs[sub_id] = (filter, handler)
            return sub_id

    def unsubscribe(self, sub_id: int) -> None:
        """Remove a subscription; unknown ids are a no-op."""
        with self._lock:
            self._subs.pop(sub_id, None)

    def publish(self, kind: EventKind, dataset: str) -> CoreEvent:
        """Stamp and deliver an event; returns the stamped event."""
        with self._lock:
            event = CoreEvent(kind, dataset, next(self._seq))
            # Snapshot matches now: late subscribers must not see this event.
            matched = [sid for sid, (flt, _) in self._subs.items() if flt.matches(event)]
            self._queue.append((event, matched))
            if self._dispatching:
                return event
            self._dispatching = True
        try:
            self._drain()
        finally:
            with self._lock:
                self._dispatching = False
        return event

    def _drain(self) -> None:
        while True:
            with self._lock:
                if not self._queue:
                    return
                event, matched = self._queue.popleft()
            for sub_id in matched:
                with self._lock:
                    entry = self._subs.get(sub_id)
                if entry is None:
                    continue  # unsubscribed while queued
                try:
                    entry[1](event)
                except Exception:
                    logger.exception("event handler failed for %s", event)
