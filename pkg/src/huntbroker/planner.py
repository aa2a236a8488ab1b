"""Deterministic hunt planner and explanation builder.

The planner is retrieval plus fixed rules behind the same contract an LLM
planner would get: request in, non-executable plan out. It never reads
evidence, so hostile strings in telemetry cannot steer candidate selection.
Explanations keep observed lines (byte-exact quotes of evidence fields) and
rule-generated interpretation strictly apart.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import timedelta

from .values import digest_json, format_timespan, value_to_json

ENTITY_KINDS = ("account", "device", "url", "domain", "filehash", "email")

STOPWORDS = frozenset(
    """a an and any are as at be by for from in into is it of on or our over
    that the these this those to was we were with""".split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

CONFIDENCE_LEVELS = ("low", "medium", "high")


class PlannerError(Exception):
    pass


class NoCandidates(PlannerError):
    pass


class BadRequest(PlannerError):
    pass


@dataclass(frozen=True)
class HuntRequest:
    session_id: str
    requester: object  # Principal
    objective_text: str
    entities: tuple  # of (kind, value)
    requested_window: timedelta
    requested_source: str
    case_id: str

    def __post_init__(self):
        if not self.objective_text or not self.objective_text.strip():
            raise BadRequest("objective_text must be nonempty")
        if self.requested_window <= timedelta(0):
            raise BadRequest("requested_window must be positive")
        for kind, _ in self.entities:
            if kind not in ENTITY_KINDS:
                raise BadRequest(f"unknown entity kind {kind!r}")
        object.__setattr__(self, "entities", tuple((k, v) for k, v in self.entities))

    @property
    def request_id(self) -> str:
        body = {
            "session_id": self.session_id,
            "requester": getattr(self.requester, "user_id", str(self.requester)),
            "objective_text": self.objective_text,
            "entities": [list(e) for e in self.entities],
            "requested_window": format_timespan(self.requested_window),
            "requested_source": self.requested_source,
            "case_id": self.case_id,
        }
        return "req-" + digest_json(body)[:16]


@dataclass(frozen=True)
class Candidate:
    template_id: str
    score: float
    suggested_params: dict

    def to_json(self) -> dict:
        return {
            "template_id": self.template_id,
            "score": self.score,
            "suggested_params": {k: value_to_json(v) for k, v in self.suggested_params.items()},
        }


@dataclass(frozen=True)
class HuntPlan:
    request_id: str
    intent_terms: tuple
    candidates: tuple  # of Candidate
    assumptions: tuple
    grounding_refs: tuple  # of (artifact kind, id, version)

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "intent_terms": list(self.intent_terms),
            "candidates": [c.to_json() for c in self.candidates],
            "assumptions": list(self.assumptions),
            "grounding_refs": [list(r) for r in self.grounding_refs],
        }


def intent_terms_of(objective_text: str) -> tuple:
    tokens = _TOKEN_RE.findall(objective_text.lower())
    return tuple(t for t in tokens if t not in STOPWORDS)


def _suggest_params(entry, request: HuntRequest, assumptions: list) -> dict:
    by_kind = {}
    for kind, value in request.entities:
        by_kind.setdefault(kind, value)
    params = {}
    for spec in entry.params:
        if spec.type == "timespan":
            params[spec.name] = request.requested_window
        elif spec.type == "string" and spec.name in by_kind:
            params[spec.name] = by_kind[spec.name]
        elif spec.type == "long" and spec.name == "row_cap":
            params[spec.name] = 100
            note = f"row cap defaulted to 100 for {entry.id}"
            if note not in assumptions:
                assumptions.append(note)
    return params


def plan(request: HuntRequest, catalog, snapshot) -> HuntPlan:
    terms = list(intent_terms_of(request.objective_text))
    for kind, _ in request.entities:
        if kind not in terms:
            terms.append(kind)
    hits = catalog.retrieve(terms, k=3)
    if not hits:
        raise NoCandidates(f"no templates match terms {terms!r}")

    assumptions: list = []
    candidates = []
    grounding = [("schema_snapshot", "default", snapshot.version)]
    for hit in hits:
        entry = catalog.get(hit.template_id)
        candidates.append(
            Candidate(
                template_id=hit.template_id,
                score=hit.score,
                suggested_params=_suggest_params(entry, request, assumptions),
            )
        )
        grounding.append(("template", entry.id, entry.version))

    return HuntPlan(
        request_id=request.request_id,
        intent_terms=tuple(intent_terms_of(request.objective_text)),
        candidates=tuple(candidates),
        assumptions=tuple(assumptions),
        grounding_refs=tuple(grounding),
    )


# ---------------------------------------------------------------------------
# Explanations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interpretation:
    text: str
    confidence: str

    def to_json(self) -> dict:
        return {"text": self.text, "confidence": self.confidence}


@dataclass(frozen=True)
class Explanation:
    observed: tuple
    interpretation: tuple  # of Interpretation
    uncertainty_notes: tuple

    def to_json(self) -> dict:
        return {
            "observed": list(self.observed),
            "interpretation": [i.to_json() for i in self.interpretation],
            "uncertainty_notes": list(self.uncertainty_notes),
        }


def _quote(value) -> str:
    # json string escaping: byte-exact, control characters escaped
    return json.dumps(value if isinstance(value, str) else str(value), ensure_ascii=False)


def _observed_lines(evidence) -> tuple:
    lines = []
    for ev in evidence:
        for kind in sorted(ev.entities):
            lines.append(f"[{ev.id}] entity {kind} = {_quote(ev.entities[kind])}")
        for column in sorted(ev.attributes):
            value = ev.attributes[column]
            if value is None:
                continue
            lines.append(f"[{ev.id}] {column} = {_quote(value)}")
    return tuple(lines)


def explain(evidence: list, plan_: HuntPlan | None = None) -> Explanation:
    if not evidence:
        return Explanation(
            observed=(),
            interpretation=(),
            uncertainty_notes=("no matching events in window",),
        )
    observed = _observed_lines(evidence)
    interpretation = []
    accounts: dict = {}
    devices: dict = {}
    for ev in evidence:
        account = ev.entities.get("account")
        if account is not None:
            accounts[account] = accounts.get(account, 0) + 1
        device = ev.entities.get("device")
        if device is not None:
            devices[device] = devices.get(device, 0) + 1
    for account, n in sorted(accounts.items()):
        if n >= 3:
            interpretation.append(
                Interpretation(f"{n} events created by the same initiating account", "medium")
            )
    for device, n in sorted(devices.items()):
        if n >= 3:
            interpretation.append(
                Interpretation(f"{n} events concentrated on a single device", "low")
            )
    notes = []
    if not interpretation:
        notes.append("no grouping pattern met an interpretation threshold")
    return Explanation(
        observed=observed,
        interpretation=tuple(interpretation),
        uncertainty_notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Injection scanning
# ---------------------------------------------------------------------------

INJECTION_PATTERNS = (
    ("instruction_override", re.compile(r"(?i)\bignore\s+(all\s+)?(previous|prior)\s+(instructions?|messages?)")),
    ("control_disable", re.compile(r"(?i)\bdisable\s+(the\s+)?(broker|polic\w+|audit\w*|logging|guardrail\w*)")),
    ("role_escalation", re.compile(r"(?i)\brun\s+as\s+admin(istrator)?\b")),
    ("blanket_approval", re.compile(r"(?i)\bapprove\s+(all|every|any)\b")),
    ("template_placeholder", re.compile(r"\{\{.*?\}\}")),
    ("markup_injection", re.compile(r"(?i)<\s*(script|iframe|img)\b")),
    ("prompt_keyword", re.compile(r"(?i)\bsystem\s+prompt\b")),
)


def scan_text(text: str) -> tuple:
    """Pattern names matching instruction-like content in one string."""
    if not isinstance(text, str):
        return ()
    return tuple(name for name, pattern in INJECTION_PATTERNS if pattern.search(text))


def injection_scan(evidence: list) -> list:
    """Flag instruction-like strings in evidence fields. Never modifies anything."""
    flags = []
    for ev in evidence:
        fields = {}
        for kind in sorted(ev.entities):
            fields[f"entity:{kind}"] = ev.entities[kind]
        for column in sorted(ev.attributes):
            fields[column] = ev.attributes[column]
        for name, value in fields.items():
            if not isinstance(value, str):
                continue
            for pattern_name in scan_text(value):
                flags.append((ev.id, name, pattern_name))
    return flags
