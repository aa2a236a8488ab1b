"""Threat-intelligence store with provenance, validity windows, and TLP gates.

Indicators are deduplicated on (type, normalized value, source) keeping the
record with the later valid_until. Reads see an immutable published tuple, so
a lookup never observes a half-finished ingest. Enrichment only attaches
context from indicators that pass the active() gate; it never invents
severity.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime
from urllib.parse import urlsplit

from .values import format_datetime, parse_datetime

INDICATOR_TYPES = ("ip", "domain", "url", "filehash", "email")
TLP_LEVELS = ("clear", "green", "amber", "red")

# conservative default: red is never shared into hunt evidence
DEFAULT_ALLOWED_TLP = frozenset({"clear", "green", "amber"})
DEFAULT_MIN_CONFIDENCE = 50


class TintelError(Exception):
    pass


@dataclass(frozen=True)
class Indicator:
    id: str
    type: str
    value: str
    source: str
    confidence: int
    valid_from: datetime
    valid_until: datetime
    tlp: str
    first_seen: datetime

    def dedupe_key(self) -> tuple:
        return (self.type, self.value, self.source)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "type": self.type,
            "value": self.value,
            "source": self.source,
            "confidence": self.confidence,
            "valid_from": format_datetime(self.valid_from),
            "valid_until": format_datetime(self.valid_until),
            "tlp": self.tlp,
            "first_seen": format_datetime(self.first_seen),
        }


def normalize_value(ind_type: str, value: str) -> str:
    if ind_type in ("domain", "email", "filehash"):
        return value.strip().lower()
    if ind_type == "url":
        parts = urlsplit(value.strip())
        if parts.scheme and parts.netloc:
            return parts._replace(
                scheme=parts.scheme.lower(), netloc=parts.netloc.lower()
            ).geturl()
        return value.strip()
    return value.strip()


def _parse_indicator(doc: dict) -> tuple:
    """Validate one raw record. Returns (indicator, None) or (None, reason)."""
    ind_type = doc.get("type")
    if ind_type not in INDICATOR_TYPES:
        return None, "UnknownType"
    source = doc.get("source")
    if not source or not isinstance(source, str):
        return None, "MissingSource"
    try:
        valid_from = _as_datetime(doc.get("valid_from"))
        valid_until = _as_datetime(doc.get("valid_until"))
        first_seen = _as_datetime(doc.get("first_seen", doc.get("valid_from")))
    except (ValueError, TypeError):
        return None, "BadValidity"
    if valid_from > valid_until:
        return None, "BadValidity"
    confidence = doc.get("confidence")
    if not isinstance(confidence, int) or isinstance(confidence, bool) or not 0 <= confidence <= 100:
        return None, "BadConfidence"
    tlp = doc.get("tlp", "amber")
    if tlp not in TLP_LEVELS:
        return None, "BadTlp"
    value = doc.get("value")
    if not value or not isinstance(value, str):
        return None, "MissingValue"
    return (
        Indicator(
            id=str(doc.get("id", "")),
            type=ind_type,
            value=normalize_value(ind_type, value),
            source=source,
            confidence=confidence,
            valid_from=valid_from,
            valid_until=valid_until,
            tlp=tlp,
            first_seen=first_seen,
        ),
        None,
    )


def _as_datetime(value) -> datetime:
    if isinstance(value, datetime):
        return value
    if isinstance(value, str):
        return parse_datetime(value)
    raise TypeError(f"not a datetime: {value!r}")


@dataclass(frozen=True)
class EnrichmentMatch:
    evidence_id: str
    indicator_id: str
    matched_field: str
    source: str
    confidence: int
    tlp: str
    valid_from: datetime
    valid_until: datetime

    def to_json(self) -> dict:
        return {
            "evidence_id": self.evidence_id,
            "indicator_id": self.indicator_id,
            "matched_field": self.matched_field,
            "source": self.source,
            "confidence": self.confidence,
            "tlp": self.tlp,
            "valid_from": format_datetime(self.valid_from),
            "valid_until": format_datetime(self.valid_until),
        }


def _entity_map(evidence) -> dict:
    if isinstance(evidence, dict):
        return evidence.get("entities", {}) or {}
    return getattr(evidence, "entities", {}) or {}


def _evidence_id(evidence) -> str:
    if isinstance(evidence, dict):
        return str(evidence.get("id", ""))
    return str(getattr(evidence, "id", ""))


def _host_of(url: str):
    try:
        return (urlsplit(url).hostname or "").lower() or None
    except ValueError:
        return None


def _indicator_matches(ind: Indicator, kind: str, raw: str) -> bool:
    value = str(raw)
    if ind.type == "domain":
        host = None
        if kind == "url":
            host = _host_of(value)
        elif kind == "domain":
            host = value.lower()
        if host is None:
            return False
        return host == ind.value or host.endswith("." + ind.value)
    if ind.type == "url" and kind == "url":
        return normalize_value("url", value) == ind.value
    if ind.type == "ip" and kind == "ip":
        return value == ind.value
    if ind.type == "filehash" and kind == "filehash":
        return value.lower() == ind.value
    if ind.type == "email" and kind == "account":
        return value.lower() == ind.value
    return False


class TIStore:
    """Indicator store; ingest is serialized, reads see published snapshots."""

    def __init__(self):
        self._lock = threading.Lock()
        self._published: tuple = ()

    # -- loading ---------------------------------------------------------------

    def ingest(self, indicators: list) -> dict:
        accepted = 0
        deduplicated = 0
        rejected = []
        with self._lock:
            store = {ind.dedupe_key(): ind for ind in self._published}
            for index, doc in enumerate(indicators):
                ind, reason = _parse_indicator(doc)
                if ind is None:
                    rejected.append((index, reason))
                    continue
                key = ind.dedupe_key()
                if key in store:
                    deduplicated += 1
                    if ind.valid_until > store[key].valid_until:
                        store[key] = ind
                else:
                    store[key] = ind
                    accepted += 1
            self._published = tuple(store.values())
        return {"accepted": accepted, "deduplicated": deduplicated, "rejected": rejected}

    @classmethod
    def from_jsonl(cls, text: str) -> "TIStore":
        store = cls()
        docs = [json.loads(line) for line in text.splitlines() if line.strip()]
        store.ingest(docs)
        return store

    def to_jsonl(self) -> str:
        inds = sorted(self._published, key=lambda i: i.id)
        return "".join(json.dumps(ind.to_json(), sort_keys=True) + "\n" for ind in inds)

    def indicators(self) -> tuple:
        return self._published

    # -- reads -------------------------------------------------------------------

    def active(
        self,
        ind_type: str | None = None,
        min_confidence: int = DEFAULT_MIN_CONFIDENCE,
        at: datetime | None = None,
        allowed_tlp=DEFAULT_ALLOWED_TLP,
    ) -> list:
        if at is None:
            raise TintelError("active() needs an explicit query time")
        hits = [
            ind
            for ind in self._published
            if (ind_type is None or ind.type == ind_type)
            and ind.confidence >= min_confidence
            and ind.valid_from <= at <= ind.valid_until
            and ind.tlp in allowed_tlp
        ]
        hits.sort(key=lambda i: (-i.confidence, i.id))
        return hits

    def enrich(
        self,
        evidence: list,
        min_confidence: int = DEFAULT_MIN_CONFIDENCE,
        at: datetime | None = None,
        allowed_tlp=DEFAULT_ALLOWED_TLP,
        pool=None,
    ) -> list:
        # pool override bypasses provenance filtering; only ablation runs use it
        if pool is None:
            pool = self.active(None, min_confidence, at, allowed_tlp)
        else:
            pool = tuple(pool)
        matches = []
        for ev in evidence:
            entities = _entity_map(ev)
            for kind in sorted(entities):
                raw = entities[kind]
                if raw is None:
                    continue
                for ind in pool:
                    if _indicator_matches(ind, kind, str(raw)):
                        matches.append(
                            EnrichmentMatch(
                                evidence_id=_evidence_id(ev),
                                indicator_id=ind.id,
                                matched_field=kind,
                                source=ind.source,
                                confidence=ind.confidence,
                                tlp=ind.tlp,
                                valid_from=ind.valid_from,
                                valid_until=ind.valid_until,
                            )
                        )
        return matches
