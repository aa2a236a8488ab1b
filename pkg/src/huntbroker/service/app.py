"""HTTP API for the brokered hunt pipeline.

Session lifecycle: Open -> PlanReady -> Decided -> (AwaitingApproval ->)
Executed -> Closed. A rejected decision keeps the session in Decided; the
analyst may file a new request there (fresh Generation and BrokerDecision
traces in the same session) or close it with a disposition. Every stage
appends to the hash-chained trace store.
"""

import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .. import __version__
from ..adapters import AdapterError, execute_readonly, normalize
from ..audit import TraceStore, UnknownSession
from ..broker import (
    Broker,
    NotEscalated,
    RoleNotPermitted,
    SelfApprovalForbidden,
    UnknownDecision,
    decision_from_json,
)
from ..catalog import CatalogError
from ..evalkit import SystemUnderTest, build_default_suite, run_offline_benchmark
from ..fixtures import (
    coerce_params,
    combined_dataset,
    default_catalog,
    load_default_policy,
    load_default_snapshot,
    load_default_sources,
    load_default_ti_store,
)
from ..planner import (
    BadRequest,
    HuntRequest,
    NoCandidates,
    explain,
    injection_scan,
    plan,
    scan_text,
)
from ..values import format_datetime, parse_timespan, utcnow
from .auth import DEFAULT_SECRET, AuthError, authenticate, PRINCIPAL_ROLES
from .store import JsonStateStore

SESSION_STATES = ("Open", "PlanReady", "Decided", "AwaitingApproval", "Executed", "Closed")


@dataclass
class ServiceConfig:
    secret: str = DEFAULT_SECRET
    seed: int = 42
    state_path: Optional[str] = None


@dataclass
class Session:
    id: str
    case_id: str
    requester: str
    state: str = "Open"
    created_at: str = ""
    source_id: Optional[str] = None
    entities: tuple = ()
    objective: str = ""
    injection_flags: tuple = ()
    plan_json: Optional[dict] = None
    bound: Optional[dict] = None
    decision_id: Optional[str] = None
    evidence: list = field(default_factory=list)
    explanation: Optional[dict] = None
    enrichment: list = field(default_factory=list)
    disposition: Optional[dict] = None

    def to_json(self, full: bool = False) -> dict:
        doc = {
            "id": self.id,
            "case_id": self.case_id,
            "requester": self.requester,
            "state": self.state,
            "created_at": self.created_at,
            "source_id": self.source_id,
            "decision_id": self.decision_id,
        }
        if full:
            doc.update(
                {
                    "objective": self.objective,
                    "entities": [list(e) for e in self.entities],
                    "injection_flags": list(self.injection_flags),
                    "plan": self.plan_json,
                    "bound": self.bound,
                    "evidence": self.evidence,
                    "explanation": self.explanation,
                    "enrichment": self.enrichment,
                    "disposition": self.disposition,
                }
            )
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Session":
        return cls(
            id=doc["id"],
            case_id=doc["case_id"],
            requester=doc["requester"],
            state=doc["state"],
            created_at=doc["created_at"],
            source_id=doc.get("source_id"),
            entities=tuple(tuple(e) for e in doc.get("entities", [])),
            objective=doc.get("objective", ""),
            injection_flags=tuple(doc.get("injection_flags", ())),
            plan_json=doc.get("plan"),
            bound=doc.get("bound"),
            decision_id=doc.get("decision_id"),
            evidence=list(doc.get("evidence", [])),
            explanation=doc.get("explanation"),
            enrichment=list(doc.get("enrichment", [])),
            disposition=doc.get("disposition"),
        )


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.snapshot = load_default_snapshot()
        self.catalog = default_catalog()
        self.policy = load_default_policy()
        self.ti_store = load_default_ti_store()
        self.sources = load_default_sources(self.snapshot)
        self.dataset, self.truth, self.as_of = combined_dataset(config.seed)
        self.broker = Broker(self.policy, self.snapshot, ti_store=self.ti_store)
        self.trace = TraceStore()
        self.sessions: dict = {}
        self.decision_sessions: dict = {}  # decision id -> session id
        self.plans: dict = {}  # session id -> live HuntPlan (not persisted)
        self.counter = 0
        self.lock = threading.Lock()
        self.store = JsonStateStore(config.state_path) if config.state_path else None
        self._benchmark_cache = None
        if self.store is not None:
            self._restore()

    # -- persistence ---------------------------------------------------------

    def _restore(self) -> None:
        doc = self.store.load()
        if not doc:
            return
        self.counter = doc.get("counter", 0)
        self.sessions = {
            sid: Session.from_json(sdoc) for sid, sdoc in doc.get("sessions", {}).items()
        }
        self.decision_sessions = dict(doc.get("decision_sessions", {}))
        for ddoc in doc.get("decisions", []):
            decision = decision_from_json(ddoc)
            self.broker.decisions[decision.id] = decision
        self.trace = TraceStore.restore(
            doc.get("trace_records", []), doc.get("trace_payloads", {})
        )

    def persist(self) -> None:
        if self.store is None:
            return
        self.store.save(
            {
                "counter": self.counter,
                "sessions": {sid: s.to_json(full=True) for sid, s in self.sessions.items()},
                "decisions": [d.to_json() for d in self.broker.decisions.values()],
                "decision_sessions": self.decision_sessions,
                "trace_records": [r.to_json() for r in self.trace.records],
                "trace_payloads": dict(self.trace.payloads),
            }
        )

    # -- helpers --------------------------------------------------------------

    def new_session(self, case_id: str, requester: str) -> Session:
        self.counter += 1
        session = Session(
            id=f"s-{self.counter:04d}",
            case_id=case_id,
            requester=requester,
            created_at=format_datetime(utcnow()),
        )
        self.sessions[session.id] = session
        return session

    def benchmark_report(self) -> dict:
        if self._benchmark_cache is None:
            system = SystemUnderTest(
                snapshot=self.snapshot,
                catalog=self.catalog,
                policy=self.policy,
                ti_store=self.ti_store,
            )
            self._benchmark_cache = run_offline_benchmark(
                build_default_suite(), system, at=self.as_of
            ).to_json()
        return self._benchmark_cache


class ApiError(Exception):
    def __init__(self, status: int, payload: dict):
        super().__init__(str(payload))
        self.status = status
        self.payload = payload


def _not_found(kind: str, key: str) -> ApiError:
    return ApiError(404, {"error": "NOT_FOUND", "detail": f"{kind} {key} not found"})


def _conflict(code: str, detail: str, **extra) -> ApiError:
    payload = {"error": code, "detail": detail}
    payload.update(extra)
    return ApiError(409, payload)


class CreateSessionBody(BaseModel):
    case_id: str = Field(min_length=1, max_length=200)


class RequestBody(BaseModel):
    objective: str = Field(min_length=1, max_length=4000)
    entities: list = Field(default_factory=list)
    window: str = "7d"
    source: str = "graph_hunting"
    params: dict = Field(default_factory=dict)


class ExecuteBody(BaseModel):
    source: Optional[str] = None
    fault: Optional[str] = None


class DispositionBody(BaseModel):
    usefulness: int = Field(ge=1, le=5)
    accepted_pivots: int = Field(default=0, ge=0)
    rejected_recommendations: list = Field(default_factory=list)
    notes: str = ""


def build_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config)
    app = FastAPI(title="huntbroker", version=__version__)
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    @app.exception_handler(AuthError)
    async def auth_error_handler(request: Request, exc: AuthError):
        return JSONResponse(status_code=exc.status, content={"error": "AUTH", "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "VALIDATION", "detail": exc.errors()},
        )

    def principal_of(request: Request):
        return authenticate(request.headers, config.secret, state.policy)

    def get_session(session_id: str) -> Session:
        session = state.sessions.get(session_id)
        if session is None:
            raise _not_found("session", session_id)
        return session

    # -- lifecycle routes ------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody, principal=Depends(principal_of)):
        with state.lock:
            session = state.new_session(body.case_id, principal.user_id)
            state.persist()
            return session.to_json()

    @app.post("/sessions/{session_id}/request")
    def submit_request(session_id: str, body: RequestBody, principal=Depends(principal_of)):
        with state.lock:
            session = get_session(session_id)
            if session.state not in ("Open", "PlanReady", "Decided"):
                raise _conflict(
                    "BAD_STATE", f"cannot submit a request in state {session.state}"
                )
            try:
                entities = tuple((str(k), str(v)) for k, v in body.entities)
            except (TypeError, ValueError):
                raise ApiError(400, {"error": "VALIDATION", "detail": "entities must be [kind, value] pairs"})
            try:
                window = parse_timespan(body.window)
            except ValueError as exc:
                raise ApiError(400, {"error": "VALIDATION", "detail": str(exc)})
            if body.source not in state.sources:
                raise ApiError(400, {"error": "UNKNOWN_SOURCE", "detail": body.source})
            try:
                hunt_request = HuntRequest(
                    session_id=session.id,
                    requester=principal,
                    objective_text=body.objective,
                    entities=entities,
                    requested_window=window,
                    requested_source=body.source,
                    case_id=session.case_id,
                )
            except BadRequest as exc:
                raise ApiError(400, {"error": "VALIDATION", "detail": str(exc)})

            state.trace.append(
                session.id,
                "RequestIntake",
                principal.user_id,
                {
                    "request_id": hunt_request.request_id,
                    "objective": body.objective,
                    "entities": [list(e) for e in entities],
                    "window": body.window,
                    "source": body.source,
                },
            )
            try:
                hunt_plan = plan(hunt_request, state.catalog, state.snapshot)
            except NoCandidates as exc:
                state.persist()
                raise ApiError(400, {"error": "NO_CANDIDATES", "detail": str(exc)})
            state.trace.append(
                session.id,
                "Grounding",
                "planner",
                {
                    "request_id": hunt_plan.request_id,
                    "grounding_refs": [list(ref) for ref in hunt_plan.grounding_refs],
                    "intent_terms": list(hunt_plan.intent_terms),
                },
            )

            top = hunt_plan.candidates[0]
            entry = state.catalog.get(top.template_id)
            params = dict(top.suggested_params)
            params.update(coerce_params(entry, dict(body.params)))
            try:
                bound = state.catalog.bind(top.template_id, params)
            except CatalogError as exc:
                state.persist()
                raise ApiError(
                    400, {"error": "BIND_FAILED", "detail": f"{type(exc).__name__}: {exc}"}
                )
            rendered_params = {
                name: format_datetime(v) if hasattr(v, "isoformat") else str(v)
                for name, v in params.items()
            }
            state.trace.append(
                session.id,
                "Generation",
                "planner",
                {
                    "request_id": hunt_plan.request_id,
                    "template_id": bound.template_id,
                    "query_text": bound.text,
                    "params": rendered_params,
                },
            )

            session.state = "PlanReady"
            session.source_id = body.source
            session.entities = entities
            session.objective = body.objective
            session.injection_flags = scan_text(body.objective)
            session.plan_json = hunt_plan.to_json()
            session.bound = {
                "template_id": bound.template_id,
                "query_text": bound.text,
                "params": rendered_params,
            }
            session.decision_id = None
            state.plans[session.id] = hunt_plan
            state.persist()
            return {
                "session": session.to_json(),
                "plan": session.plan_json,
                "bound": session.bound,
                "injection_flags": list(session.injection_flags),
            }

    @app.get("/sessions/{session_id}/plan")
    def get_plan(session_id: str, principal=Depends(principal_of)):
        session = get_session(session_id)
        if session.plan_json is None:
            raise _not_found("plan for session", session_id)
        return {"plan": session.plan_json, "bound": session.bound}

    @app.post("/sessions/{session_id}/decide")
    def decide(session_id: str, principal=Depends(principal_of)):
        with state.lock:
            session = get_session(session_id)
            if session.state != "PlanReady":
                raise _conflict("BAD_STATE", f"cannot decide in state {session.state}")
            decision = state.broker.decide(
                request_id=session.plan_json["request_id"],
                principal=principal,
                query_text=session.bound["query_text"],
                template_id=session.bound["template_id"],
                source_id=session.source_id,
                entities=session.entities,
                at=state.as_of,
                injection_flags=session.injection_flags,
            )
            state.trace.append(session.id, "BrokerDecision", "broker", decision.to_json())
            session.decision_id = decision.id
            state.decision_sessions[decision.id] = session.id
            session.state = "AwaitingApproval" if decision.verdict == "Escalated" else "Decided"
            state.persist()
            if decision.verdict == "Rejected":
                return JSONResponse(status_code=422, content={"decision": decision.to_json()})
            return {"decision": decision.to_json(), "session": session.to_json()}

    @app.post("/decisions/{decision_id}/approve")
    def approve(decision_id: str, principal=Depends(principal_of)):
        with state.lock:
            try:
                decision = state.broker.approve(decision_id, principal, at=state.as_of)
            except UnknownDecision:
                raise _not_found("decision", decision_id)
            except NotEscalated as exc:
                raise _conflict("NOT_ESCALATED", str(exc))
            except SelfApprovalForbidden:
                raise ApiError(
                    403,
                    {"error": "SELF_APPROVAL_FORBIDDEN", "detail": "requester cannot approve own query"},
                )
            except RoleNotPermitted as exc:
                raise ApiError(403, {"error": "ROLE_NOT_PERMITTED", "detail": str(exc)})
            state.persist()
            return {"decision": decision.to_json()}

    @app.post("/sessions/{session_id}/execute")
    def execute_session(session_id: str, body: ExecuteBody, principal=Depends(principal_of)):
        with state.lock:
            session = get_session(session_id)
            if session.state not in ("Decided", "AwaitingApproval"):
                raise _conflict("BAD_STATE", f"cannot execute in state {session.state}")
            decision = state.broker.get_decision(session.decision_id)
            if not decision.executable():
                raise _conflict(
                    "DECISION_NOT_EXECUTABLE",
                    f"verdict {decision.verdict} does not permit execution",
                    decision=decision.to_json(),
                )
            # the decision was made against session.source_id; executing against
            # a different source would dodge the allowlist check
            if body.source is not None and body.source != session.source_id:
                raise ApiError(
                    400,
                    {"error": "SOURCE_MISMATCH", "detail": "decision applies to " + str(session.source_id)},
                )
            descriptor = state.sources.get(session.source_id)
            if descriptor is None:
                raise ApiError(400, {"error": "UNKNOWN_SOURCE", "detail": str(session.source_id)})
            query_text = session.bound["query_text"]
            try:
                result, meta = execute_readonly(
                    descriptor, decision, query_text, state.dataset, state.as_of, fault=body.fault
                )
            except AdapterError as exc:
                raise ApiError(502, {"error": type(exc).__name__, "detail": str(exc)})
            record = state.trace.append(
                session.id,
                "Execution",
                f"adapter:{descriptor.source_id}",
                {
                    "decision_id": decision.id,
                    "meta": meta.to_json(),
                    "executed_query": decision.query_for_execution(query_text),
                },
            )
            if meta.error is None:
                try:
                    evidence = normalize(
                        result,
                        descriptor.source_id,
                        decision,
                        decision.query_for_execution(query_text),
                        trace_ref=record.record_hash[:16],
                    )
                except AdapterError as exc:
                    raise ApiError(502, {"error": type(exc).__name__, "detail": str(exc)})
            else:
                evidence = []  # adapter reported a fault; nothing to normalize
            explanation = explain(evidence, state.plans.get(session.id))
            enrichment = state.ti_store.enrich(
                evidence, min_confidence=state.policy.min_ti_confidence, at=state.as_of
            )
            flags = injection_scan(evidence)
            session.state = "Executed"
            session.evidence = [ev.to_json() for ev in evidence]
            session.explanation = explanation.to_json()
            session.enrichment = [m.to_json() for m in enrichment]
            state.persist()
            return {
                "meta": meta.to_json(),
                "evidence": session.evidence,
                "explanation": session.explanation,
                "enrichment": session.enrichment,
                "injection_flags": [list(f) for f in flags],
            }

    @app.post("/sessions/{session_id}/disposition")
    def disposition(session_id: str, body: DispositionBody, principal=Depends(principal_of)):
        with state.lock:
            session = get_session(session_id)
            if session.state not in ("Decided", "AwaitingApproval", "Executed"):
                raise _conflict("BAD_STATE", f"cannot close from state {session.state}")
            doc = {
                "session_id": session.id,
                "usefulness": body.usefulness,
                "accepted_pivots": body.accepted_pivots,
                "rejected_recommendations": body.rejected_recommendations,
                "notes": body.notes,
            }
            state.trace.append(session.id, "Disposition", principal.user_id, doc)
            session.disposition = doc
            session.state = "Closed"
            state.persist()
            return {"session": session.to_json(), "disposition": doc}

    # -- read routes -----------------------------------------------------------

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str, principal=Depends(principal_of)):
        get_session(session_id)
        records = state.trace.session_records(session_id)
        try:
            completeness = state.trace.completeness(session_id)
        except UnknownSession:
            completeness = None
        return {
            "records": [r.to_json() for r in records],
            "completeness": completeness,
            "verify": state.trace.verify(),
        }

    @app.get("/sessions")
    def list_sessions(principal=Depends(principal_of)):
        return {
            "sessions": [
                s.to_json() for _, s in sorted(state.sessions.items())
            ]
        }

    @app.get("/sessions/{session_id}")
    def session_detail(session_id: str, principal=Depends(principal_of)):
        session = get_session(session_id)
        doc = session.to_json(full=True)
        if session.decision_id:
            doc["decision"] = state.broker.get_decision(session.decision_id).to_json()
        return doc

    @app.get("/decisions/{decision_id}")
    def decision_detail(decision_id: str, principal=Depends(principal_of)):
        try:
            decision = state.broker.get_decision(decision_id)
        except UnknownDecision:
            raise _not_found("decision", decision_id)
        return {
            "decision": decision.to_json(),
            "session_id": state.decision_sessions.get(decision_id),
        }

    @app.get("/approvals")
    def list_approvals(principal=Depends(principal_of)):
        pending = [
            {
                "decision": d.to_json(),
                "session_id": state.decision_sessions.get(d.id),
            }
            for d in state.broker.decisions.values()
            if d.verdict == "Escalated" and d.approval is None
        ]
        pending.sort(key=lambda doc: doc["decision"]["id"])
        return {"approvals": pending}

    @app.get("/reports/benchmark")
    def benchmark_report(principal=Depends(principal_of)):
        return state.benchmark_report()

    @app.get("/principals")
    def list_principals():
        return {
            "principals": [
                {"user_id": uid, "role": role, "signature": None}
                for uid, role in sorted(PRINCIPAL_ROLES.items())
            ]
        }

    @app.get("/sources")
    def sources(principal=Depends(principal_of)):
        return {
            "sources": [
                {
                    "source_id": d.source_id,
                    "tables": list(d.tables),
                    "max_rows": d.max_rows,
                    "retention_days": d.retention_days,
                }
                for d in sorted(state.sources.values(), key=lambda d: d.source_id)
            ]
        }

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "version": __version__}

    return app
