"""Message-level study runtime: engine + write-ahead event log.

Ordering per message: gate on sequence number, append the inbound record to
the session's log, apply it to the engine, append the outbound records, then
hand them back for sending. A crash after any acknowledged message therefore
loses nothing: recovery replays the inbound records through a fresh engine
and regenerates identical state (and identical outbound messages, which is
how replay equivalence is tested).

Messages that fail the sequence gate, or that cannot be attributed to a
session, change no state and are answered with an ERROR without being logged.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from ..errors import (
    ConflictError,
    DomainError,
    LifecycleError,
    SequenceError,
    StateError,
    ValidationError,
)
from ..session import Session, Study, StudyConfig, session_id_for
from . import protocol
from .eventlog import EventLog

_ERROR_CODES = {
    ValidationError: "validation_error",
    SequenceError: "sequence_error",
    ConflictError: "conflict",
    StateError: "state_error",
    DomainError: "bad_request",
}


class StudyRuntime:
    def __init__(self, config: StudyConfig, root: Optional[Path | str] = None):
        self.config = config
        self.study = Study(config)
        self.root = Path(root) if root is not None else None
        self.log: Optional[EventLog] = (
            EventLog(self.root / "logs") if self.root is not None else None
        )
        self._out_seq: dict[str, int] = {}
        self._in_floor: dict[str, int] = {}
        self._lock = threading.Lock()

    # -- public entry points -------------------------------------------------

    def handle_text(self, text: str) -> list[str]:
        try:
            msg = protocol.decode(text)
        except ValidationError as exc:
            err = protocol.envelope("ERROR", None, 0,
                                    {"code": "bad_request", "message": str(exc)})
            return [protocol.encode(err)]
        return [protocol.encode(m) for m in self.handle_message(msg)]

    def handle_message(self, msg: dict) -> list[dict]:
        with self._lock:
            return self._handle(msg, log=True)

    @classmethod
    def recover(cls, config: StudyConfig, root: Path | str) -> "StudyRuntime":
        """Rebuild a runtime from the event logs under ``root``."""
        runtime = cls(config, root)
        assert runtime.log is not None
        for session_id in runtime.log.session_ids():
            for record in runtime.log.read(session_id):
                if record["direction"] == "in":
                    runtime._handle(record["message"], log=False)
        return runtime

    def replay_outbound(self) -> dict[str, list[dict]]:
        """Outbound messages regenerated from the inbound log, per session."""
        assert self.log is not None
        fresh = StudyRuntime(self.config, root=None)
        out: dict[str, list[dict]] = {}
        for session_id in self.log.session_ids():
            out[session_id] = []
            for record in self.log.read(session_id):
                if record["direction"] == "in":
                    out[session_id].extend(fresh._handle(record["message"], log=False))
        return out

    def logged_outbound(self) -> dict[str, list[dict]]:
        assert self.log is not None
        return {
            sid: [r["message"] for r in self.log.read(sid) if r["direction"] == "out"]
            for sid in self.log.session_ids()
        }

    # -- dispatch -------------------------------------------------------------

    def _handle(self, msg: dict, log: bool) -> list[dict]:
        """Resolve the session, log the inbound record, apply, log the output.

        Unattributable messages (unknown session, missing participant) change
        no state and get an out-of-band ERROR with seq 0; everything else is
        logged before it is acted on, including messages that end up rejected,
        so recovery replays the exact same decisions.
        """
        msg_type = msg["type"]
        seq = msg["seq"]
        payload = msg["payload"]

        is_resume = bool(msg.get("session_id"))
        if msg_type == "HELLO" and not is_resume:
            participant_id = str(payload.get("participant_id") or "").strip()
            if not participant_id:
                return [self._session_less_error(
                    "validation_error", "HELLO requires participant_id")]
            # session id is a pure function of (study, participant): the log
            # file is known before the session object exists
            session_id = session_id_for(self.config.study_id, participant_id)
        else:
            session_id = msg.get("session_id")
            if not session_id or session_id not in self.study.sessions:
                return [self._session_less_error(
                    "state_error", f"unknown session {session_id!r}")]

        if log:
            self._log_in(session_id, msg)

        out = self._apply(session_id, msg_type, seq, payload, is_resume)

        if log:
            for m in out:
                self._log_out(session_id, m)
        return out

    def _apply(self, session_id: str, msg_type: str, seq: int,
               payload: dict, is_resume: bool = False) -> list[dict]:
        if msg_type == "HELLO":
            self._in_floor[session_id] = seq  # new inbound epoch
            if is_resume:
                session = self.study.get_session(session_id)
                events = self.study.current_state_events(session)
                return [self._envelope_out(session_id, ev) for ev in events]
            try:
                _, events = self.study.create_session(
                    str(payload.get("participant_id")).strip())
                return [self._envelope_out(session_id, ev) for ev in events]
            except LifecycleError as exc:
                return [self._error(session_id,
                                    _ERROR_CODES.get(type(exc), "internal"),
                                    str(exc))]

        if seq <= self._in_floor.get(session_id, 0):
            return [self._error(
                session_id, "sequence_error",
                f"stale seq {seq}, last accepted {self._in_floor[session_id]}")]
        self._in_floor[session_id] = seq

        try:
            if msg_type == "SUBMIT_CONSUMPTION":
                events = self._apply_submit(session_id, payload)
            elif msg_type == "QUESTIONNAIRE_SUBMIT":
                events = self.study.submit_questionnaire(session_id, payload)
            else:  # pragma: no cover - decode() restricts types
                raise ValidationError(f"unsupported type {msg_type!r}")
            return [self._envelope_out(session_id, ev) for ev in events]
        except LifecycleError as exc:
            return [self._error(session_id, _ERROR_CODES.get(type(exc), "internal"),
                                str(exc))]

    def _apply_submit(self, session_id: str, payload: dict) -> list[dict]:
        round_idx = payload.get("round")
        period = payload.get("period")
        if not isinstance(round_idx, int) or not isinstance(period, int) \
                or isinstance(round_idx, bool) or isinstance(period, bool):
            raise ValidationError("round and period must be integers",
                                  ["round", "period"])
        return self.study.submit_consumption(
            session_id, round_idx, period, payload.get("consumption"))

    # -- envelopes and logging -------------------------------------------------

    def _envelope_out(self, session_id: str, event: dict) -> dict:
        seq = self._out_seq.get(session_id, 0) + 1
        self._out_seq[session_id] = seq
        return protocol.envelope(event["type"], session_id, seq, event["payload"])

    def _error(self, session_id: str, code: str, message: str) -> dict:
        return self._envelope_out(
            session_id, {"type": "ERROR",
                         "payload": {"code": code, "message": message}})

    @staticmethod
    def _session_less_error(code: str, message: str) -> dict:
        return protocol.envelope("ERROR", None, 0,
                                 {"code": code, "message": message})

    def _log_in(self, session_id: str, msg: dict) -> None:
        if self.log is not None:
            self.log.append(session_id, "in", msg)

    def _log_out(self, session_id: str, msg: dict) -> None:
        if self.log is not None:
            self.log.append(session_id, "out", msg)
