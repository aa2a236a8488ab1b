import dataclasses
import hashlib
import json
import random

import pytest

from huntbroker.audit import (
    GENESIS_HASH,
    STAGES,
    StageOrderViolation,
    StoreSealed,
    TraceStore,
    UnknownSession,
    verify_export,
)
from huntbroker.synth import ANCHOR


def six_stage_session(store=None, session="s1"):
    store = store or TraceStore()
    for stage in STAGES:
        store.append(session, stage, "u-analyst" if stage != "Execution" else "adapter",
                     {"stage": stage}, at=ANCHOR)
    return store


def test_genesis_record():
    store = TraceStore()
    record = store.append("s1", "RequestIntake", "u-1", {"objective": "x"}, at=ANCHOR)
    assert record.seq == 1
    assert record.prev_hash == GENESIS_HASH
    assert len(record.record_hash) == 64


def test_chain_links_and_hand_recomputation():
    store = six_stage_session()
    records = store.records
    assert [r.seq for r in records] == [1, 2, 3, 4, 5, 6]
    for prev, record in zip(records, records[1:]):
        assert record.prev_hash == prev.record_hash
    # independent recomputation of every record hash
    for record in records:
        body = {
            "actor": record.actor,
            "payload_digest": record.payload_digest,
            "prev_hash": record.prev_hash,
            "seq": record.seq,
            "session_id": record.session_id,
            "stage": record.stage,
            "timestamp": record.timestamp,
        }
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        assert hashlib.sha256(blob.encode("utf-8")).hexdigest() == record.record_hash


def test_stage_order_rules():
    store = TraceStore()
    with pytest.raises(StageOrderViolation):
        store.append("s1", "Grounding", "u-1", {})
    store.append("s1", "RequestIntake", "u-1", {})
    with pytest.raises(StageOrderViolation):
        store.append("s1", "Execution", "adapter", {})
    store.append("s1", "BrokerDecision", "broker", {})
    store.append("s1", "Execution", "adapter", {})  # now legal
    # ordering is per session
    with pytest.raises(StageOrderViolation):
        store.append("s2", "Execution", "adapter", {})


def test_seq_is_store_wide():
    store = TraceStore()
    store.append("s1", "RequestIntake", "u-1", {})
    store.append("s2", "RequestIntake", "u-2", {})
    store.append("s1", "Grounding", "planner", {})
    assert [r.seq for r in store.records] == [1, 2, 3]
    assert store.verify()["intact"] is True


def test_verify_untampered_and_empty():
    assert TraceStore().verify() == {"intact": True, "first_break": None}
    assert six_stage_session().verify() == {"intact": True, "first_break": None}


def test_verify_detects_payload_digest_flip():
    store = six_stage_session()
    target = store.records[2]
    flipped = ("0" if target.payload_digest[0] != "0" else "1") + target.payload_digest[1:]
    store.records[2] = dataclasses.replace(target, payload_digest=flipped)
    outcome = store.verify()
    assert outcome == {"intact": False, "first_break": 3}


def test_verify_detects_any_single_field_mutation():
    rng = random.Random(7)
    fields = ["session_id", "stage", "timestamp", "actor", "payload_digest", "prev_hash", "record_hash"]
    for trial in range(30):
        store = six_stage_session()
        idx = rng.randrange(len(store.records))
        field = rng.choice(fields)
        record = store.records[idx]
        value = getattr(record, field) + "x"
        store.records[idx] = dataclasses.replace(record, **{field: value})
        assert store.verify()["intact"] is False, (trial, idx, field)


def test_rehashing_a_middle_record_still_breaks_the_chain():
    from huntbroker.audit import record_hash_of

    store = six_stage_session()
    record = store.records[2]
    body = record.body()
    body["actor"] = "mallory"
    forged = dataclasses.replace(
        record, actor="mallory", record_hash=record_hash_of(body)
    )
    store.records[2] = forged
    outcome = store.verify()
    assert outcome["intact"] is False
    assert outcome["first_break"] == 4  # the successor's prev_hash no longer matches


def test_completeness_rules():
    store = TraceStore()
    for stage in STAGES[:4]:
        store.append("rejected", stage, "u-1", {}, at=ANCHOR)
    assert store.completeness("rejected") == {"complete": True, "missing": []}

    for stage in STAGES[:5]:
        store.append("executed", stage, "u-1", {}, at=ANCHOR)
    assert store.completeness("executed") == {"complete": False, "missing": ["Disposition"]}

    store.append("executed", "Disposition", "u-1", {}, at=ANCHOR)
    assert store.completeness("executed") == {"complete": True, "missing": []}

    with pytest.raises(UnknownSession):
        store.completeness("nope")


def test_export_seals_store():
    store = six_stage_session()
    export = store.export()
    with pytest.raises(StoreSealed):
        store.append("s1", "Disposition", "u-1", {})
    assert verify_export(export["records"], export["payloads"]) == {
        "intact": True, "first_break": None,
    }


def test_export_tamper_detection():
    store = six_stage_session()
    export = store.export()
    lines = export["records"].splitlines()
    doc = json.loads(lines[3])
    doc["actor"] = "mallory"
    lines[3] = json.dumps(doc, sort_keys=True)
    outcome = verify_export("\n".join(lines), export["payloads"])
    assert outcome["intact"] is False
    assert outcome["first_break"] == 4


def test_export_payload_tamper_detection():
    store = six_stage_session()
    export = store.export()
    digest = next(iter(export["payloads"]))
    export["payloads"][digest] = export["payloads"][digest].replace("stage", "stge", 1)
    outcome = verify_export(export["records"], export["payloads"])
    assert outcome["intact"] is False


def test_payload_side_store_round_trip():
    store = TraceStore()
    payload = {"objective": "hunt", "window": "7d"}
    record = store.append("s1", "RequestIntake", "u-1", payload, at=ANCHOR)
    assert store.payload_of(record) == payload


def test_deterministic_given_fixed_timestamps():
    a = six_stage_session()
    b = six_stage_session()
    assert [r.to_json() for r in a.records] == [r.to_json() for r in b.records]
