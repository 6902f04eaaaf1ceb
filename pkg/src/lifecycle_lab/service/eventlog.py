"""Append-only per-session event logs.

One JSON record per line, one file per session, never mutated. The inbound
records are the source of truth: replaying them through a fresh engine
reconstructs all session state (the engine is deterministic). Outbound
records are kept for audit and for verifying replay equivalence.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Iterator


class EventLog:
    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.log"

    def append(self, session_id: str, direction: str, message: dict,
               ts_ms: int | None = None) -> None:
        record = {
            "ts": int(time.time() * 1000) if ts_ms is None else ts_ms,
            "session_id": session_id,
            "seq": message.get("seq"),
            "direction": direction,
            "message": message,
        }
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with open(self.path_for(session_id), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    def read(self, session_id: str) -> list[dict]:
        return list(self.iter_records(self.path_for(session_id)))

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.log"))

    @staticmethod
    def iter_records(path: Path) -> Iterator[dict]:
        if not Path(path).exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)
