"""Append-only, hash-chained event log: the project's single history.

Every gateway call, stage transition and human review action lands here
exactly once; each event embeds the previous event's hash so tampering is
detectable.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from pathlib import Path

GENESIS = "0" * 64


def _event_hash(event: dict) -> str:
    material = json.dumps(
        {k: event[k] for k in ("index", "ts", "stage", "kind", "payload", "prev")},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class AuditTrail:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        # Stages issue gateway calls concurrently; appends must serialize or
        # two events would chain off the same predecessor.
        self._lock = threading.Lock()

    def events(self) -> list[dict]:
        if not self.path.exists():
            return []
        lines = self.path.read_text(encoding="utf-8").splitlines()
        return [json.loads(line) for line in lines if line.strip()]

    def append(self, stage: str, kind: str, payload: dict) -> dict:
        with self._lock:
            events = self.events()
            prev = events[-1]["hash"] if events else GENESIS
            event = {
                "index": len(events),
                "ts": time.time(),
                "stage": stage,
                "kind": kind,
                "payload": payload,
                "prev": prev,
            }
            event["hash"] = _event_hash(event)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            return event

    def verify(self) -> int | None:
        """Index of the first tampered event, or None when the chain is intact."""
        prev = GENESIS
        for i, event in enumerate(self.events()):
            if event.get("index") != i or event.get("prev") != prev:
                return i
            if _event_hash(event) != event.get("hash"):
                return i
            prev = event["hash"]
        return None
