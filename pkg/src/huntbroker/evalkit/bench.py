"""Offline benchmark runner, ablation harness, and failure taxonomy.

The runner drives each case through the same stages the live service uses:
objective scan, plan, bind (or take the case's free-form text), decide. It
never executes queries; the gates here are about generation quality and
policy outcomes, not detection results.
"""

from dataclasses import dataclass

from ..broker import Broker, Principal
from ..catalog import CatalogError, template_checksum
from ..kql.analyzer import analyze
from ..kql.errors import KqlError
from ..kql.parser import parse
from ..planner import HuntRequest, NoCandidates, plan, scan_text
from ..synth import ANCHOR
from ..tintel import DEFAULT_ALLOWED_TLP
from ..values import digest_json, parse_timespan
from .metrics import ranking_metrics
from .suite import BLOCKING_VERDICTS, CASE_CLASSES, UNSAFE_CLASSES

MIN_SUITE_SIZE = 40

ABLATION_TOGGLES = (
    "no_schema_grounding",
    "no_template_constraint",
    "no_time_enforcement",
    "no_ti_provenance",
)

# toggle -> broker rule names switched off for the run
_TOGGLE_RULES = {
    "no_schema_grounding": frozenset(),
    "no_template_constraint": frozenset({"freeform"}),
    "no_time_enforcement": frozenset({"time"}),
    "no_ti_provenance": frozenset({"ti"}),
}

_PREDICTIONS = {
    "no_schema_grounding": "schema_valid_rate strictly decreases",
    "no_template_constraint": "unsafe acceptance strictly increases",
    "no_time_enforcement": "time_filter_compliance strictly decreases",
    "no_ti_provenance": "stale intel matches strictly increase",
}


class EvalError(Exception):
    pass


class SuiteTooSmall(EvalError):
    pass


class UnknownToggle(EvalError):
    pass


@dataclass(frozen=True)
class SystemUnderTest:
    snapshot: object
    catalog: object
    policy: object
    ti_store: object

    @classmethod
    def default(cls) -> "SystemUnderTest":
        from ..fixtures import (
            default_catalog,
            load_default_policy,
            load_default_snapshot,
            load_default_ti_store,
        )

        snapshot = load_default_snapshot()
        return cls(
            snapshot=snapshot,
            catalog=default_catalog(),
            policy=load_default_policy(),
            ti_store=load_default_ti_store(),
        )


@dataclass(frozen=True)
class BenchmarkReport:
    suite_id: str
    case_count: int
    schema_valid_rate: float
    time_filter_compliance: float
    unsafe_block_rate: float
    retrieval: dict
    stale_intel_matches: int
    per_case: tuple
    fingerprint: dict
    notes: tuple = ()

    def __post_init__(self):
        for name in ("schema_valid_rate", "time_filter_compliance", "unsafe_block_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} out of range: {rate}")
        if not self.fingerprint:
            raise ValueError("fingerprint is required")

    def to_json(self) -> dict:
        return {
            "suite_id": self.suite_id,
            "case_count": self.case_count,
            "schema_valid_rate": self.schema_valid_rate,
            "time_filter_compliance": self.time_filter_compliance,
            "unsafe_block_rate": self.unsafe_block_rate,
            "retrieval": dict(self.retrieval),
            "stale_intel_matches": self.stale_intel_matches,
            "per_case": [dict(c) for c in self.per_case],
            "fingerprint": dict(self.fingerprint),
            "notes": list(self.notes),
        }


def _schema_valid(query_text, snapshot) -> bool:
    try:
        report = analyze(parse(query_text), snapshot)
    except KqlError:
        return False
    return not report.unknown_tables and not report.unknown_columns


def _has_lookback(query_text, snapshot) -> bool:
    try:
        return analyze(parse(query_text), snapshot).lookback is not None
    except KqlError:
        return False


def _run_case(case, system, broker, disabled_rules, use_ungrounded, at) -> dict:
    outcome = {
        "id": case.id,
        "class": case.case_class,
        "expected_verdict": case.expected_verdict,
        "verdict": None,
        "reasons": [],
        "schema_valid": None,
        "executable": False,
        "final_has_lookback": None,
        "retrieval": None,
        "error": None,
    }
    principal = Principal.for_role(f"u-{case.role}", case.role, system.policy)
    flags = scan_text(case.objective)

    query_text = case.query_text
    template_id = None
    if query_text is None:
        request = HuntRequest(
            session_id=case.id,
            requester=principal,
            objective_text=case.objective,
            entities=case.entities,
            requested_window=parse_timespan(case.window),
            requested_source=case.source_id,
            case_id=case.id,
        )
        try:
            hunt_plan = plan(request, system.catalog, system.snapshot)
        except NoCandidates:
            outcome["error"] = "NO_CANDIDATES"
            return outcome
        ranked = [c.template_id for c in hunt_plan.candidates]
        if case.relevant:
            outcome["retrieval"] = ranking_metrics(ranked, set(case.relevant), k=3)
        if use_ungrounded and case.ungrounded_query is not None:
            query_text = case.ungrounded_query
        else:
            top = hunt_plan.candidates[0]
            params = dict(top.suggested_params)
            params.update(dict(case.param_overrides))
            try:
                bound = system.catalog.bind(top.template_id, params)
            except CatalogError as exc:
                outcome["error"] = f"BIND_FAILED: {exc}"
                outcome["schema_valid"] = False
                return outcome
            query_text = bound.text
            template_id = bound.template_id

    outcome["schema_valid"] = _schema_valid(query_text, system.snapshot)
    decision = broker.decide(
        request_id=f"bench-{case.id}",
        principal=principal,
        query_text=query_text,
        template_id=template_id,
        source_id=case.source_id,
        entities=case.entities,
        at=at,
        disabled_rules=disabled_rules,
        injection_flags=flags,
    )
    outcome["verdict"] = decision.verdict
    outcome["reasons"] = list(decision.reasons)
    outcome["executable"] = decision.executable()
    if decision.executable():
        final_text = decision.query_for_execution(query_text)
        outcome["final_has_lookback"] = _has_lookback(final_text, system.snapshot)
    return outcome


def _stale_matches(case, system, disabled_rules, at) -> int:
    if not case.entities:
        return 0
    probe = [{"id": case.id, "entities": dict(case.entities)}]
    min_conf = system.policy.min_ti_confidence
    qualifying = {
        ind.id
        for ind in system.ti_store.active(None, min_conf, at, DEFAULT_ALLOWED_TLP)
    }
    if "ti" in disabled_rules:
        matches = system.ti_store.enrich(probe, at=at, pool=system.ti_store.indicators())
    else:
        matches = system.ti_store.enrich(probe, min_confidence=min_conf, at=at)
    return sum(1 for m in matches if m.indicator_id not in qualifying)


def suite_id_of(suite) -> str:
    return "suite-" + digest_json([[c.id, c.case_class] for c in suite])[:12]


def run_offline_benchmark(
    suite,
    system: SystemUnderTest = None,
    disabled_rules: frozenset = frozenset(),
    use_ungrounded: bool = False,
    at=ANCHOR,
) -> BenchmarkReport:
    if len(suite) < MIN_SUITE_SIZE:
        raise SuiteTooSmall(f"suite has {len(suite)} cases, need {MIN_SUITE_SIZE}")
    present = {c.case_class for c in suite}
    missing = [c for c in CASE_CLASSES if c not in present]
    if missing:
        raise SuiteTooSmall(f"suite missing case classes: {missing}")

    system = system or SystemUnderTest.default()
    broker = Broker(system.policy, system.snapshot, ti_store=system.ti_store)

    outcomes = []
    stale = 0
    for case in sorted(suite, key=lambda c: c.id):
        outcomes.append(_run_case(case, system, broker, disabled_rules, use_ungrounded, at))
        stale += _stale_matches(case, system, disabled_rules, at)

    generated = [o for o in outcomes if o["schema_valid"] is not None]
    valid = sum(1 for o in generated if o["schema_valid"])
    executable = [o for o in outcomes if o["executable"]]
    compliant = sum(1 for o in executable if o["final_has_lookback"])
    unsafe = [o for o in outcomes if o["class"] in UNSAFE_CLASSES]
    blocked = sum(1 for o in unsafe if o["verdict"] in BLOCKING_VERDICTS)
    labeled = [o for o in outcomes if o["retrieval"] is not None]

    retrieval = {"p_at_k": 0.0, "recall_at_k": 0.0, "mrr": 0.0, "ndcg": 0.0, "k": 3}
    if labeled:
        for key in ("p_at_k", "recall_at_k", "mrr", "ndcg"):
            retrieval[key] = sum(o["retrieval"][key] for o in labeled) / len(labeled)

    checksums = {
        entry.id: template_checksum(entry)
        for entry in system.catalog.list_templates()
    }
    return BenchmarkReport(
        suite_id=suite_id_of(suite),
        case_count=len(suite),
        schema_valid_rate=valid / len(generated) if generated else 0.0,
        time_filter_compliance=compliant / len(executable) if executable else 1.0,
        unsafe_block_rate=blocked / len(unsafe) if unsafe else 1.0,
        retrieval=retrieval,
        stale_intel_matches=stale,
        per_case=tuple(outcomes),
        fingerprint={
            "snapshot_version": system.snapshot.version,
            "policy_version": system.policy.version,
            "template_checksums": checksums,
        },
        notes=(
            "schema_valid_rate denominator is every generated or bound query,"
            " including seeded-invalid cases",
            "time_filter_compliance denominator is executable decisions only",
        ),
    )


@dataclass(frozen=True)
class AblationReport:
    toggle: str
    prediction: str
    holds: bool
    deltas: dict
    baseline: BenchmarkReport
    ablated: BenchmarkReport

    def to_json(self) -> dict:
        return {
            "toggle": self.toggle,
            "prediction": self.prediction,
            "holds": self.holds,
            "deltas": dict(self.deltas),
            "baseline": self.baseline.to_json(),
            "ablated": self.ablated.to_json(),
        }


def ablate(
    toggle: str,
    suite,
    system: SystemUnderTest = None,
    baseline: BenchmarkReport = None,
    at=ANCHOR,
) -> AblationReport:
    if toggle not in ABLATION_TOGGLES:
        raise UnknownToggle(f"unknown ablation toggle {toggle!r}")
    system = system or SystemUnderTest.default()
    if baseline is None:
        baseline = run_offline_benchmark(suite, system, at=at)
    ablated = run_offline_benchmark(
        suite,
        system,
        disabled_rules=_TOGGLE_RULES[toggle],
        use_ungrounded=(toggle == "no_schema_grounding"),
        at=at,
    )
    deltas = {
        "schema_valid_rate": ablated.schema_valid_rate - baseline.schema_valid_rate,
        "time_filter_compliance": ablated.time_filter_compliance - baseline.time_filter_compliance,
        "unsafe_block_rate": ablated.unsafe_block_rate - baseline.unsafe_block_rate,
        "stale_intel_matches": ablated.stale_intel_matches - baseline.stale_intel_matches,
    }
    if toggle == "no_schema_grounding":
        holds = deltas["schema_valid_rate"] < 0
    elif toggle == "no_template_constraint":
        holds = deltas["unsafe_block_rate"] < 0
    elif toggle == "no_time_enforcement":
        holds = deltas["time_filter_compliance"] < 0
    else:
        holds = deltas["stale_intel_matches"] > 0
    return AblationReport(
        toggle=toggle,
        prediction=_PREDICTIONS[toggle],
        holds=holds,
        deltas=deltas,
        baseline=baseline,
        ablated=ablated,
    )


FAILURE_CLASSES = (
    "schema_failure",
    "prompt_interpretation_failure",
    "policy_failure",
    "stale_context",
    "scoring_failure",
    "interface_failure",
)

_INTERFACE_CODES = {"SIMULATED_TIMEOUT", "TABLE_NOT_IN_SOURCE", "MISSING_TIME_COLUMN"}
_STALE_CODES = {"SNAPSHOT_VERSION_MISMATCH", "STALE_SNAPSHOT"}
_SCHEMA_CODES = {"UNKNOWN_TABLE", "UNKNOWN_COLUMN", "QUERY_PARSE_FAILED"}
_PROMPT_CODES = {"NO_CANDIDATES", "NOCANDIDATES", "BAD_REQUEST"}
_POLICY_CODES = {
    "FREEFORM_NOT_PERMITTED",
    "SOURCE_NOT_ALLOWED",
    "TABLE_NOT_ALLOWED",
    "MISSING_TIME_FILTER",
    "LOOKBACK_EXCEEDS_MAX",
    "SENSITIVE_PROJECTION",
    "COST_BUDGET_EXCEEDED",
    "TI_CONFIDENCE_TOO_LOW",
    "OBJECTIVE_INJECTION_SUSPECTED",
}
_SCORING_CODES = {"UNKNOWN_ROW_ID", "UNKNOWNROWID", "EMPTY_RANKING", "METRIC_ERROR"}


def negative_case_classify(outcome) -> str:
    """Root-cause class for one failed case.

    Signals are the outcome's reason codes plus its error string; the stage
    is carried along for the record but the mapping is code-driven:

        interface_failure   SIMULATED_TIMEOUT, TABLE_NOT_IN_SOURCE, MISSING_TIME_COLUMN
        stale_context       SNAPSHOT_VERSION_MISMATCH, STALE_SNAPSHOT
        schema_failure      UNKNOWN_TABLE, UNKNOWN_COLUMN, QUERY_PARSE_FAILED
        prompt_interp.      NO_CANDIDATES, BAD_REQUEST
        policy_failure      any broker policy reason code
        scoring_failure     UNKNOWN_ROW_ID, EMPTY_RANKING, METRIC_ERROR

    Checked in that order; anything else is returned as "Unclassifiable"
    so the caller records it rather than dropping it.
    """
    if isinstance(outcome, dict):
        reasons = set(outcome.get("reasons") or ())
        error = outcome.get("error")
    else:
        reasons = set(getattr(outcome, "reasons", ()) or ())
        error = getattr(outcome, "error", None)
    if error:
        token = str(error).split(":")[0].strip().replace(" ", "_").upper()
        reasons.add(token)
    codes = {str(r).upper() for r in reasons}

    if codes & _INTERFACE_CODES:
        return "interface_failure"
    if codes & _STALE_CODES:
        return "stale_context"
    if codes & _SCHEMA_CODES:
        return "schema_failure"
    if codes & _PROMPT_CODES:
        return "prompt_interpretation_failure"
    if codes & _POLICY_CODES:
        return "policy_failure"
    if codes & _SCORING_CODES:
        return "scoring_failure"
    return "Unclassifiable"
