"""Append-only JSON-lines journal with periodic snapshots.

Every state mutation is journaled before being applied, with all
nondeterminism (clock, RNG draws, model output) resolved into the event
payload, so replaying the journal reconstructs service state exactly.  A torn
final line from a crash mid-write is dropped on load.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterator


class JournalError(Exception):
    pass


class EventJournal:
    def __init__(self, directory: str):
        os.makedirs(directory, exist_ok=True)
        self.directory = directory
        self.path = os.path.join(directory, "journal.jsonl")
        self.snapshot_path = os.path.join(directory, "snapshot.json")
        self._fh = open(self.path, "a", encoding="utf-8")
        self.next_seq = 1
        for event in self.iter_events():
            self.next_seq = event["seq"] + 1

    def close(self) -> None:
        self._fh.close()

    def append(self, event: dict[str, Any]) -> dict[str, Any]:
        event = dict(event)
        event["seq"] = self.next_seq
        self.next_seq += 1
        self._fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        return event

    def iter_events(self, after_seq: int = 0) -> Iterator[dict[str, Any]]:
        if not os.path.exists(self.path):
            return
        with open(self.path, "rb") as fh:
            blob = fh.read()
        if not blob:
            return
        text = blob.decode("utf-8", errors="replace")
        lines = text.split("\n")
        complete = lines[:-1]  # last element is "" or a torn line; drop it
        prev_seq = 0
        for line in complete:
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JournalError(f"corrupt journal line: {line[:80]!r}") from exc
            seq = event.get("seq")
            if not isinstance(seq, int) or seq <= prev_seq:
                raise JournalError(f"non-increasing sequence number at {seq!r}")
            prev_seq = seq
            if seq > after_seq:
                yield event

    def write_snapshot(self, seq: int, state: dict[str, Any]) -> None:
        tmp = self.snapshot_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"seq": seq, "state": state}, fh, ensure_ascii=False, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.snapshot_path)

    def read_snapshot(self) -> tuple[int, dict[str, Any]] | None:
        if not os.path.exists(self.snapshot_path):
            return None
        try:
            with open(self.snapshot_path, encoding="utf-8") as fh:
                data = json.load(fh)
            return data["seq"], data["state"]
        except (json.JSONDecodeError, KeyError):
            # Snapshots are an optimization; fall back to a full replay.
            return None
