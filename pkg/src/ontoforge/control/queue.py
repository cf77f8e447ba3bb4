"""Decision queue: the pending curation items (candidate reviews, homonymy
and ambiguity queries, the stop decision) and their recorded resolutions.
Item ids are deterministic, so re-emitting the same query is a no-op and
every item can be resolved at most once."""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..errors import OntoForgeError

CANDIDATE = "candidate"
HOMONYMY = "homonymy"
AMBIGUITY = "ambiguity"
STOP = "stop"


class UnknownItem(OntoForgeError):
    pass


class AlreadyResolved(OntoForgeError):
    pass


@dataclass
class QueueItem:
    item_id: str
    kind: str
    payload: dict
    created_at: str
    resolution: dict | None = None
    resolved_at: str | None = None
    actor: str | None = None

    @property
    def pending(self) -> bool:
        return self.resolution is None


class DecisionQueue:
    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._items: dict[str, QueueItem] = {}
        if self.path.exists():
            for entry in json.loads(self.path.read_text(encoding="utf-8")):
                item = QueueItem(**entry)
                self._items[item.item_id] = item

    def _persist(self) -> None:
        tmp = self.path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(
                [asdict(item) for item in self._items.values()],
                ensure_ascii=False,
                indent=1,
            ),
            encoding="utf-8",
        )
        tmp.replace(self.path)

    def add(self, item_id: str, kind: str, payload: dict) -> bool:
        """Queue an item. Returns False (and changes nothing) when the id is
        already known — emitted queries enter the queue exactly once."""
        with self._lock:
            if item_id in self._items:
                return False
            self._items[item_id] = QueueItem(
                item_id,
                kind,
                payload,
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            self._persist()
            return True

    def has(self, item_id: str) -> bool:
        return item_id in self._items

    def get(self, item_id: str) -> QueueItem:
        item = self._items.get(item_id)
        if item is None:
            raise UnknownItem(item_id)
        return item

    def items(self) -> list[QueueItem]:
        return list(self._items.values())

    def pending(self) -> list[QueueItem]:
        return [item for item in self._items.values() if item.pending]

    def resolve(self, item_id: str, resolution: dict, actor: str) -> QueueItem:
        with self._lock:
            item = self.get(item_id)
            if item.resolution is not None:
                raise AlreadyResolved(item_id)
            item.resolution = resolution
            item.resolved_at = datetime.now(timezone.utc).isoformat()
            item.actor = actor
            self._persist()
            return item

    def stop_requested(self) -> bool:
        item = self._items.get("stop")
        return item is not None and item.resolution is not None
