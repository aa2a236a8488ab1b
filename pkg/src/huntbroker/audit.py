"""Append-only, hash-chained session traces.

Each record's hash covers its own fields plus the previous record's hash, so
any byte flipped in an exported chain breaks verification at or before the
next link. Payload bodies live in a side store keyed by digest; the chain
itself stays small and verification cost does not depend on payload size.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime

from .values import canonical_json, digest_json, format_datetime, sha256_hex, utcnow

STAGES = (
    "RequestIntake",
    "Grounding",
    "Generation",
    "BrokerDecision",
    "Execution",
    "Disposition",
)

GENESIS_HASH = "0" * 64


class AuditError(Exception):
    pass


class StageOrderViolation(AuditError):
    pass


class StoreSealed(AuditError):
    pass


class UnknownSession(AuditError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    seq: int
    session_id: str
    stage: str
    timestamp: str  # rendered datetime; hashed as part of the record
    actor: str
    payload_digest: str
    prev_hash: str
    record_hash: str

    def body(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.session_id,
            "stage": self.stage,
            "timestamp": self.timestamp,
            "actor": self.actor,
            "payload_digest": self.payload_digest,
            "prev_hash": self.prev_hash,
        }

    def to_json(self) -> dict:
        doc = self.body()
        doc["record_hash"] = self.record_hash
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "TraceRecord":
        return cls(
            seq=doc["seq"],
            session_id=doc["session_id"],
            stage=doc["stage"],
            timestamp=doc["timestamp"],
            actor=doc["actor"],
            payload_digest=doc["payload_digest"],
            prev_hash=doc["prev_hash"],
            record_hash=doc["record_hash"],
        )


def record_hash_of(body: dict) -> str:
    return sha256_hex(canonical_json(body).encode("utf-8"))


class TraceStore:
    """Serialized appender over an in-memory chain with a payload side store."""

    def __init__(self):
        self._lock = threading.Lock()
        self.records: list[TraceRecord] = []
        self.payloads: dict[str, str] = {}  # digest -> canonical payload json
        self.sealed = False

    # -- appends -----------------------------------------------------------------

    def append(self, session_id: str, stage: str, actor: str, payload, at: datetime | None = None) -> TraceRecord:
        if stage not in STAGES:
            raise AuditError(f"unknown stage {stage!r}")
        with self._lock:
            if self.sealed:
                raise StoreSealed("store sealed after export")
            session_stages = [r.stage for r in self.records if r.session_id == session_id]
            if not session_stages and stage != "RequestIntake":
                raise StageOrderViolation(
                    f"session {session_id}: {stage} before RequestIntake"
                )
            if stage == "Execution" and "BrokerDecision" not in session_stages:
                raise StageOrderViolation(
                    f"session {session_id}: Execution before any BrokerDecision"
                )
            digest = digest_json(payload)
            self.payloads.setdefault(digest, canonical_json(payload))
            body = {
                "seq": len(self.records) + 1,
                "session_id": session_id,
                "stage": stage,
                "timestamp": format_datetime(at or utcnow()),
                "actor": actor,
                "payload_digest": digest,
                "prev_hash": self.records[-1].record_hash if self.records else GENESIS_HASH,
            }
            record = TraceRecord(record_hash=record_hash_of(body), **body)
            self.records.append(record)
            return record

    @classmethod
    def restore(cls, records_json: list, payloads: dict) -> "TraceStore":
        """Rebuild a store from persisted records, refusing a broken chain."""
        records = [TraceRecord.from_json(doc) for doc in records_json]
        outcome = verify_records(records)
        if not outcome["intact"]:
            raise AuditError(
                f"refusing to restore: chain breaks at seq {outcome['first_break']}"
            )
        store = cls()
        store.records = records
        store.payloads = dict(payloads)
        return store

    # -- reads ---------------------------------------------------------------------

    def session_records(self, session_id: str) -> list:
        return [r for r in self.records if r.session_id == session_id]

    def payload_of(self, record: TraceRecord):
        text = self.payloads.get(record.payload_digest)
        return None if text is None else json.loads(text)

    def verify(self) -> dict:
        return verify_records(self.records)

    def completeness(self, session_id: str) -> dict:
        present = {r.stage for r in self.session_records(session_id)}
        if not present:
            raise UnknownSession(session_id)
        required = STAGES if "Execution" in present else STAGES[:4]
        missing = [s for s in required if s not in present]
        return {"complete": not missing, "missing": missing}

    # -- export -----------------------------------------------------------------

    def export(self) -> dict:
        """Freeze the store and emit records + payload archive for re-verification."""
        with self._lock:
            self.sealed = True
            records_jsonl = "".join(
                json.dumps(r.to_json(), sort_keys=True) + "\n" for r in self.records
            )
            return {"records": records_jsonl, "payloads": dict(self.payloads)}


def verify_records(records) -> dict:
    """Recompute every link; {intact, first_break} with the first bad seq."""
    prev = GENESIS_HASH
    for i, record in enumerate(records):
        body = record.body() if isinstance(record, TraceRecord) else {
            k: record[k]
            for k in ("seq", "session_id", "stage", "timestamp", "actor", "payload_digest", "prev_hash")
        }
        declared = record.record_hash if isinstance(record, TraceRecord) else record["record_hash"]
        if body["seq"] != i + 1 or body["prev_hash"] != prev or record_hash_of(body) != declared:
            return {"intact": False, "first_break": body["seq"]}
        prev = declared
    return {"intact": True, "first_break": None}


def verify_export(records_jsonl: str, payloads: dict | None = None) -> dict:
    """Verify an exported chain, optionally checking payload digests too."""
    records = [json.loads(line) for line in records_jsonl.splitlines() if line.strip()]
    outcome = verify_records(records)
    if not outcome["intact"] or payloads is None:
        return outcome
    for record in records:
        digest = record["payload_digest"]
        body = payloads.get(digest)
        if body is None or sha256_hex(body.encode("utf-8")) != digest:
            return {"intact": False, "first_break": record["seq"]}
    return outcome
