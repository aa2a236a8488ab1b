"""Policy decisions for hunt queries: approve, modify, reject, or escalate.

decide() never throws on user input; every violated rule lands in the
reasons list so one round trip reports everything wrong. Verdict precedence
is Rejected > Escalated > ApprovedWithModification > Approved. A modified
query is attached only when the final verdict is ApprovedWithModification;
escalated queries run unmodified after human approval and rely on the
adapter row backstop.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .kql import KqlError, analyze, parse, unparse
from .kql.ast import Take, Top
from .kql.cost import estimate_cost
from .kql.errors import UnknownTable as CostUnknownTable
from .tintel import DEFAULT_ALLOWED_TLP, normalize_value
from .values import digest_json, format_timespan, parse_timespan, utcnow

ROLES = ("analyst", "senior_hunter", "detection_engineer", "soc_manager")

VERDICTS = ("Approved", "ApprovedWithModification", "Rejected", "Escalated")

REASON_CODES = (
    "QUERY_PARSE_FAILED",
    "FREEFORM_NOT_PERMITTED",
    "UNKNOWN_TABLE",
    "UNKNOWN_COLUMN",
    "SOURCE_NOT_ALLOWED",
    "TABLE_NOT_ALLOWED",
    "MISSING_TIME_FILTER",
    "LOOKBACK_EXCEEDS_MAX",
    "MISSING_ROW_BOUND",
    "ROW_BOUND_EXCEEDS_CAP",
    "SENSITIVE_PROJECTION",
    "COST_BUDGET_EXCEEDED",
    "TI_CONFIDENCE_TOO_LOW",
    "OBJECTIVE_INJECTION_SUSPECTED",
)

# rule names accepted by decide(disabled_rules=...); used by ablation runs
DISABLEABLE_RULES = ("freeform", "time", "ti")


class BrokerError(Exception):
    pass


class PolicyFormatError(BrokerError):
    pass


class UnknownDecision(BrokerError):
    pass


class NotEscalated(BrokerError):
    pass


class SelfApprovalForbidden(BrokerError):
    pass


class RoleNotPermitted(BrokerError):
    pass


@dataclass(frozen=True)
class Principal:
    user_id: str
    role: str
    allowed_sources: frozenset = frozenset()

    @classmethod
    def for_role(cls, user_id: str, role: str, policy: "PolicyDocument") -> "Principal":
        if role not in ROLES:
            raise PolicyFormatError(f"unknown role {role!r}")
        return cls(user_id, role, frozenset(policy.source_allowlist.get(role, ())))


@dataclass(frozen=True)
class PolicyDocument:
    version: str
    max_lookback: timedelta
    default_row_cap: int
    hard_row_cap: int
    source_allowlist: dict  # role -> tuple of source ids
    table_allowlist: dict  # source id -> tuple of table names
    sensitive_access_roles: frozenset
    freeform_roles: frozenset
    approval_roles: frozenset
    cost_budget: int
    min_ti_confidence: int

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "max_lookback": format_timespan(self.max_lookback),
            "default_row_cap": self.default_row_cap,
            "hard_row_cap": self.hard_row_cap,
            "source_allowlist": {r: sorted(v) for r, v in sorted(self.source_allowlist.items())},
            "table_allowlist": {s: sorted(v) for s, v in sorted(self.table_allowlist.items())},
            "sensitive_access_roles": sorted(self.sensitive_access_roles),
            "freeform_roles": sorted(self.freeform_roles),
            "approval_roles": sorted(self.approval_roles),
            "cost_budget": self.cost_budget,
            "min_ti_confidence": self.min_ti_confidence,
        }


def load_policy(doc: dict) -> PolicyDocument:
    version = doc.get("version")
    if not version or not isinstance(version, str):
        raise PolicyFormatError("policy version missing or empty")
    try:
        max_lookback = doc["max_lookback"]
        if isinstance(max_lookback, str):
            max_lookback = parse_timespan(max_lookback)
        return PolicyDocument(
            version=version,
            max_lookback=max_lookback,
            default_row_cap=int(doc["default_row_cap"]),
            hard_row_cap=int(doc["hard_row_cap"]),
            source_allowlist={r: tuple(sorted(v)) for r, v in doc.get("source_allowlist", {}).items()},
            table_allowlist={s: tuple(sorted(v)) for s, v in doc.get("table_allowlist", {}).items()},
            sensitive_access_roles=frozenset(doc.get("sensitive_access_roles", ())),
            freeform_roles=frozenset(doc.get("freeform_roles", ())),
            approval_roles=frozenset(doc.get("approval_roles", ())),
            cost_budget=int(doc["cost_budget"]),
            min_ti_confidence=int(doc.get("min_ti_confidence", 50)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PolicyFormatError(f"bad policy document: {exc}") from exc


@dataclass(frozen=True)
class Approval:
    approver_id: str
    timestamp: datetime


@dataclass(frozen=True)
class Decision:
    id: str
    request_id: str
    requester_id: str
    verdict: str
    reasons: tuple
    modified_query: str | None = None
    approval: Approval | None = None
    notes: tuple = ()

    def executable(self) -> bool:
        if self.verdict in ("Approved", "ApprovedWithModification"):
            return True
        return self.verdict == "Escalated" and self.approval is not None

    def query_for_execution(self, original: str) -> str:
        return self.modified_query if self.modified_query is not None else original

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "request_id": self.request_id,
            "requester_id": self.requester_id,
            "verdict": self.verdict,
            "reasons": list(self.reasons),
            "modified_query": self.modified_query,
            "notes": list(self.notes),
            "approval": None,
        }
        if self.approval is not None:
            from .values import format_datetime

            doc["approval"] = {
                "approver_id": self.approval.approver_id,
                "timestamp": format_datetime(self.approval.timestamp),
            }
        return doc


def decision_from_json(doc: dict) -> Decision:
    approval = None
    if doc.get("approval"):
        from .values import parse_datetime

        approval = Approval(
            approver_id=doc["approval"]["approver_id"],
            timestamp=parse_datetime(doc["approval"]["timestamp"]),
        )
    return Decision(
        id=doc["id"],
        request_id=doc["request_id"],
        requester_id=doc["requester_id"],
        verdict=doc["verdict"],
        reasons=tuple(doc.get("reasons", ())),
        modified_query=doc.get("modified_query"),
        approval=approval,
        notes=tuple(doc.get("notes", ())),
    )


# entity kinds that can be checked against indicator types
_ENTITY_TO_INDICATOR_TYPE = {
    "domain": "domain",
    "url": "url",
    "filehash": "filehash",
    "email": "email",
    "account": "email",
}


def _clamp_row_bounds(query, cap: int):
    stages = []
    for stage in query.pipeline:
        if isinstance(stage, Take) and stage.count > cap:
            stage = dataclasses.replace(stage, count=cap)
        elif isinstance(stage, Top) and stage.count > cap:
            stage = dataclasses.replace(stage, count=cap)
        stages.append(stage)
    return dataclasses.replace(query, pipeline=tuple(stages))


def _append_take(query, cap: int):
    return dataclasses.replace(query, pipeline=tuple(query.pipeline) + (Take(cap),))


class Broker:
    """Holds policy + snapshot, persists decisions, runs the approval flow."""

    def __init__(self, policy: PolicyDocument, snapshot, ti_store=None):
        self.policy = policy
        self.snapshot = snapshot
        self.ti_store = ti_store
        self.decisions: dict[str, Decision] = {}

    # -- the decision procedure -------------------------------------------------

    def decide(
        self,
        request_id: str,
        principal: Principal,
        query_text: str,
        template_id: str | None = None,
        source_id: str | None = None,
        stats=None,
        entities=(),
        at: datetime | None = None,
        disabled_rules: frozenset = frozenset(),
        injection_flags=(),
    ) -> Decision:
        rejections: list[str] = []
        escalations: list[str] = []
        modifications: list[str] = []
        notes: list[str] = []
        modified_query = None

        try:
            query = parse(query_text)
        except KqlError as exc:
            return self._persist(
                request_id, principal, "Rejected", ["QUERY_PARSE_FAILED"],
                None, [f"parse: {exc}"],
            )

        report = analyze(query, self.snapshot)

        # rule 1: free-form text requires an explicitly trusted role
        if "freeform" not in disabled_rules:
            if template_id is None and principal.role not in self.policy.freeform_roles:
                rejections.append("FREEFORM_NOT_PERMITTED")

        # rule 2: every name must resolve against the schema snapshot
        if report.unknown_tables:
            rejections.append("UNKNOWN_TABLE")
            notes.append("unknown tables: " + ", ".join(sorted(report.unknown_tables)))
        if report.unknown_columns:
            rejections.append("UNKNOWN_COLUMN")
            notes.append("unknown columns: " + ", ".join(sorted(report.unknown_columns)))

        # rule 3: source and table allowlists
        if source_id is not None:
            if source_id not in self.policy.source_allowlist.get(principal.role, ()):
                rejections.append("SOURCE_NOT_ALLOWED")
                notes.append(f"source {source_id} not allowed for role {principal.role}")
            allowed_tables = self.policy.table_allowlist.get(source_id, ())
            blocked = sorted(
                t for t in report.tables
                if t not in report.unknown_tables and t not in allowed_tables
            )
            if blocked:
                rejections.append("TABLE_NOT_ALLOWED")
                notes.append(f"tables not allowed in {source_id}: " + ", ".join(blocked))

        # rule 4: a hunt must be bounded in time
        if "time" not in disabled_rules:
            if report.lookback is None:
                rejections.append("MISSING_TIME_FILTER")
            elif report.lookback > self.policy.max_lookback:
                rejections.append("LOOKBACK_EXCEEDS_MAX")
                notes.append(
                    f"lookback {format_timespan(report.lookback)} exceeds "
                    f"{format_timespan(self.policy.max_lookback)}"
                )

        # rule 5: row bounds are injected or clamped, not rejected
        needs_append = report.row_bound is None
        needs_clamp = report.row_bound is not None and report.row_bound > self.policy.hard_row_cap
        if needs_append:
            modifications.append("MISSING_ROW_BOUND")
        if needs_clamp:
            modifications.append("ROW_BOUND_EXCEEDS_CAP")

        # rule 6: sensitive projections escalate to a human
        if report.sensitive_projected and principal.role not in self.policy.sensitive_access_roles:
            escalations.append("SENSITIVE_PROJECTION")
            notes.append("sensitive columns: " + ", ".join(sorted(report.sensitive_projected)))

        # rule 7: scan budget
        if stats is not None:
            try:
                cost = estimate_cost(query, stats, report)
            except CostUnknownTable:
                cost = None
                notes.append("cost not estimable: no stats for table")
            if cost is not None and cost > self.policy.cost_budget:
                rejections.append("COST_BUDGET_EXCEEDED")
                notes.append(f"estimated {cost} rows > budget {self.policy.cost_budget}")

        # rule 8: instruction-like text found at intake needs a human reviewer
        if injection_flags:
            escalations.append("OBJECTIVE_INJECTION_SUSPECTED")
            notes.append("intake scan flagged: " + ", ".join(sorted(set(injection_flags))))

        # rule 9: entities with intel must have at least one qualifying indicator
        if "ti" not in disabled_rules and self.ti_store is not None and entities:
            stale = self._stale_intel_entities(entities, at)
            if stale:
                rejections.append("TI_CONFIDENCE_TOO_LOW")
                notes.append("entities with only non-qualifying intel: " + ", ".join(stale))

        if rejections:
            verdict = "Rejected"
            reasons = rejections + escalations + modifications
        elif escalations:
            verdict = "Escalated"
            reasons = escalations + modifications
        elif modifications:
            verdict = "ApprovedWithModification"
            reasons = modifications
            modified = query
            if needs_clamp:
                modified = _clamp_row_bounds(modified, self.policy.hard_row_cap)
            if needs_append:
                modified = _append_take(modified, self.policy.default_row_cap)
            modified_query = unparse(modified)
        else:
            verdict = "Approved"
            reasons = []

        return self._persist(request_id, principal, verdict, reasons, modified_query, notes)

    def _stale_intel_entities(self, entities, at: datetime | None) -> list:
        at = at or utcnow()
        qualifying = {
            (i.type, i.value)
            for i in self.ti_store.active(
                None, self.policy.min_ti_confidence, at, DEFAULT_ALLOWED_TLP
            )
        }
        known = {(i.type, i.value) for i in self.ti_store.indicators()}
        stale = []
        for kind, value in entities:
            ind_type = _ENTITY_TO_INDICATOR_TYPE.get(kind)
            if ind_type is None:
                continue
            key = (ind_type, normalize_value(ind_type, str(value)))
            if key in known and key not in qualifying:
                stale.append(f"{kind}:{value}")
        return stale

    def _persist(self, request_id, principal, verdict, reasons, modified_query, notes) -> Decision:
        body = {
            "request_id": request_id,
            "requester_id": principal.user_id,
            "verdict": verdict,
            "reasons": list(reasons),
            "modified_query": modified_query,
            "notes": list(notes),
        }
        decision = Decision(
            id="dec-" + digest_json(body)[:16],
            request_id=request_id,
            requester_id=principal.user_id,
            verdict=verdict,
            reasons=tuple(reasons),
            modified_query=modified_query,
            notes=tuple(notes),
        )
        self.decisions[decision.id] = decision
        return decision

    # -- approval workflow --------------------------------------------------------

    def get_decision(self, decision_id: str) -> Decision:
        decision = self.decisions.get(decision_id)
        if decision is None:
            raise UnknownDecision(decision_id)
        return decision

    def approve(self, decision_id: str, approver: Principal, at: datetime | None = None) -> Decision:
        decision = self.get_decision(decision_id)
        if decision.verdict != "Escalated":
            raise NotEscalated(decision_id)
        if approver.user_id == decision.requester_id:
            raise SelfApprovalForbidden(approver.user_id)
        if approver.role not in self.policy.approval_roles:
            raise RoleNotPermitted(approver.role)
        if decision.approval is not None:
            return decision
        approved = dataclasses.replace(
            decision, approval=Approval(approver.user_id, at or utcnow())
        )
        self.decisions[decision_id] = approved
        return approved


# ---------------------------------------------------------------------------
# Policy linting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolicyFinding:
    code: str
    detail: str

    def to_json(self) -> dict:
        return {"code": self.code, "detail": self.detail}


def check_policy_document(policy: PolicyDocument, previous: PolicyDocument | None = None) -> list:
    findings = []
    for source, tables in sorted(policy.table_allowlist.items()):
        if "*" in tables:
            findings.append(PolicyFinding("ANY_TABLE_WILDCARD", f"source {source} allows all tables"))
    for role, sources in sorted(policy.source_allowlist.items()):
        if "*" in sources:
            findings.append(PolicyFinding("ANY_TABLE_WILDCARD", f"role {role} allows all sources"))
    if policy.default_row_cap > policy.hard_row_cap:
        findings.append(
            PolicyFinding(
                "DEFAULT_CAP_EXCEEDS_HARD_CAP",
                f"default {policy.default_row_cap} > hard {policy.hard_row_cap}",
            )
        )
    if not policy.approval_roles:
        findings.append(PolicyFinding("DISABLED_APPROVAL_RULE", "approval_roles is empty"))
    if policy.max_lookback <= timedelta(0):
        findings.append(PolicyFinding("ZERO_MAX_LOOKBACK", "max_lookback is not positive"))
    if previous is not None:
        for source, tables in sorted(policy.table_allowlist.items()):
            added = set(tables) - set(previous.table_allowlist.get(source, ()))
            if added:
                findings.append(
                    PolicyFinding(
                        "EXPANDED_TABLE_ACCESS",
                        f"source {source} gained tables: " + ", ".join(sorted(added)),
                    )
                )
    return findings
