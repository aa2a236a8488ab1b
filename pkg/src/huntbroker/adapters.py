"""Mock read-only source adapters and evidence normalization.

Adapters expose exactly one operation, execute_readonly, and no writes. The
source row cap is applied as a final truncation on top of whatever bounds
the query itself carries, and the truncated flag stays honest either way.
Latency is simulated from the deterministic PRNG so tests never race a wall
clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from .kql import KqlError, execute, parse
from .kql.interpreter import ResultTable
from .synth import SplitMix64, generate_synthetic  # noqa: F401  (generator is part of this surface)
from .values import format_datetime, sha256_hex, value_to_json

SOURCE_IDS = ("graph_hunting", "log_analytics", "sentinel_lake", "adx")

# any of these mark the event-time column in normalized results
TIME_COLUMNS = ("Timestamp", "TimeGenerated")

# column-name convention for entity extraction
_ENTITY_RULES = (
    ("DeviceName", "device"),
    ("RemoteUrl", "url"),
    ("SHA256", "filehash"),
    ("RemoteIP", "ip"),
    ("UserPrincipalName", "account"),
)


class AdapterError(Exception):
    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(message or code)


class TableNotInSource(AdapterError):
    def __init__(self, table: str, source_id: str):
        super().__init__("TABLE_NOT_IN_SOURCE", f"table {table!r} not in source {source_id!r}")


class DecisionNotExecutable(AdapterError):
    def __init__(self, decision_id: str):
        super().__init__("DECISION_NOT_EXECUTABLE", f"decision {decision_id} is not executable")


class MissingTimeColumn(AdapterError):
    def __init__(self):
        super().__init__("MISSING_TIME_COLUMN", "result has no recognized time column")


class SourceConfigError(AdapterError):
    def __init__(self, message: str):
        super().__init__("SOURCE_CONFIG", message)


@dataclass(frozen=True)
class SourceDescriptor:
    source_id: str
    tables: frozenset
    max_rows: int
    retention_days: int
    simulated_latency_ms: tuple

    def to_json(self) -> dict:
        return {
            "source_id": self.source_id,
            "tables": sorted(self.tables),
            "max_rows": self.max_rows,
            "retention_days": self.retention_days,
            "simulated_latency_ms": list(self.simulated_latency_ms),
        }


def load_sources(doc: dict, snapshot=None) -> dict:
    """Parse {source_id: descriptor} config; validates against a snapshot if given."""
    sources = {}
    for source_id, sdoc in doc.get("sources", {}).items():
        if source_id not in SOURCE_IDS:
            raise SourceConfigError(f"unknown source id {source_id!r}")
        max_rows = int(sdoc["max_rows"])
        if max_rows <= 0:
            raise SourceConfigError(f"{source_id}: max_rows must be positive")
        tables = frozenset(sdoc.get("tables", ()))
        if snapshot is not None:
            for table in tables:
                schema = snapshot.tables.get(table)
                if schema is None or source_id not in schema.source_ids:
                    raise SourceConfigError(f"{source_id}: table {table!r} not mapped to this source")
        lat = sdoc.get("simulated_latency_ms", [0, 0])
        sources[source_id] = SourceDescriptor(
            source_id=source_id,
            tables=tables,
            max_rows=max_rows,
            retention_days=int(sdoc.get("retention_days", 30)),
            simulated_latency_ms=(int(lat[0]), int(lat[1])),
        )
    return sources


def list_sources(sources: dict) -> list:
    return [sources[k] for k in sorted(sources)]


@dataclass(frozen=True)
class ExecutionMeta:
    adapter_id: str
    started_at: datetime
    latency_ms: int
    rows_returned: int
    truncated: bool
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "adapter_id": self.adapter_id,
            "started_at": format_datetime(self.started_at),
            "latency_ms": self.latency_ms,
            "rows_returned": self.rows_returned,
            "truncated": self.truncated,
            "error": self.error,
        }


@dataclass(frozen=True)
class Evidence:
    id: str
    timestamp: datetime
    source_id: str
    entities: dict
    attributes: dict
    query_hash: str
    trace_ref: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "timestamp": format_datetime(self.timestamp),
            "source_id": self.source_id,
            "entities": dict(self.entities),
            "attributes": {k: value_to_json(v) for k, v in self.attributes.items()},
            "query_hash": self.query_hash,
            "trace_ref": self.trace_ref,
        }


def query_hash(text: str) -> str:
    return sha256_hex(text.encode("utf-8"))


def _simulated_latency(descriptor: SourceDescriptor, seed_text: str) -> int:
    low, high = descriptor.simulated_latency_ms
    if high <= low:
        return low
    rng = SplitMix64(int(query_hash(seed_text)[:16], 16))
    return low + rng.randrange(high - low + 1)


def execute_readonly(
    descriptor: SourceDescriptor,
    decision,
    query_text: str,
    dataset,
    now: datetime,
    fault: str | None = None,
):
    """Run the decision's executed query against one source. Read-only."""
    if not decision.executable():
        raise DecisionNotExecutable(decision.id)
    executed = decision.query_for_execution(query_text)
    query = parse(executed)  # decision implies this parses; KqlError here is a caller bug
    if query.source not in descriptor.tables:
        raise TableNotInSource(query.source, descriptor.source_id)

    latency = _simulated_latency(descriptor, executed)
    if fault == "timeout":
        meta = ExecutionMeta(
            adapter_id=descriptor.source_id,
            started_at=now,
            latency_ms=latency,
            rows_returned=0,
            truncated=False,
            error="SIMULATED_TIMEOUT",
        )
        return ResultTable(columns=[], rows=[], truncated=False), meta

    result = execute(query, dataset, now)
    truncated = result.truncated
    rows = result.rows
    if len(rows) > descriptor.max_rows:
        rows = rows[: descriptor.max_rows]
        truncated = True
    result = ResultTable(columns=result.columns, rows=rows, truncated=truncated)
    meta = ExecutionMeta(
        adapter_id=descriptor.source_id,
        started_at=now,
        latency_ms=latency,
        rows_returned=len(rows),
        truncated=truncated,
        error=None,
    )
    return result, meta


def _entity_kind(column: str) -> str | None:
    for name, kind in _ENTITY_RULES:
        if column == name:
            return kind
    if column.endswith("AccountName"):
        return "account"
    return None


def normalize(result: ResultTable, source_id: str, decision, executed_text: str, trace_ref: str = "") -> list:
    """Turn result rows into Evidence records keyed by the executed query hash."""
    names = result.column_names
    time_col = next((c for c in names if c in TIME_COLUMNS), None)
    if time_col is None:
        raise MissingTimeColumn()
    qhash = query_hash(executed_text)
    evidence = []
    for i, row in enumerate(result.rows):
        values = dict(zip(names, row))
        entities = {}
        attributes = {}
        for column, value in values.items():
            if column == time_col:
                continue
            kind = _entity_kind(column)
            if kind is not None and value is not None and kind not in entities:
                entities[kind] = value
            else:
                attributes[column] = value
        evidence.append(
            Evidence(
                id=f"ev-{qhash[:8]}-{i:05d}",
                timestamp=values[time_col],
                source_id=source_id,
                entities=entities,
                attributes=attributes,
                query_hash=qhash,
                trace_ref=trace_ref,
            )
        )
    return evidence
