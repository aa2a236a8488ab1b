"""Schema snapshots and the approved-template library.

Templates are parameterized query bodies with governance metadata. Binding
is textual substitution of rendered literals only, so a parameter value can
never smuggle new pipeline stages into a body. Retrieval is deterministic
tf-idf cosine over one small document per template.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .kql import analyze, parse
from .kql.analyzer import StaticReport
from .kql.ast import quote_string
from .values import (
    VALUE_TYPES, digest_json, format_datetime, format_timespan,
    parse_datetime, parse_timespan,
)


class CatalogError(Exception):
    pass


class SchemaFormatError(CatalogError):
    pass


class MissingOwner(CatalogError):
    pass


class PlaceholderMismatch(CatalogError):
    pass


class DuplicateId(CatalogError):
    pass


class UnknownTemplate(CatalogError):
    pass


class TemplateFormatError(CatalogError):
    pass


class TemplateNotApproved(CatalogError):
    pass


class UnknownParam(CatalogError):
    pass


class ParamTypeError(CatalogError):
    pass


class ConstraintViolation(CatalogError):
    def __init__(self, name: str, limit):
        self.name = name
        self.limit = limit
        super().__init__(f"parameter {name!r} violates constraint {limit!r}")


class BodyInvalid(CatalogError):
    def __init__(self, message: str, report: StaticReport | None = None):
        self.report = report
        super().__init__(message)


# ---------------------------------------------------------------------------
# Schema snapshots
# ---------------------------------------------------------------------------

SENSITIVITIES = ("public", "internal", "sensitive")


@dataclass(frozen=True)
class ColumnDef:
    name: str
    type: str
    sensitivity: str = "public"


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[ColumnDef, ...]
    time_column: str
    source_ids: frozenset

    def column(self, name: str) -> ColumnDef | None:
        for c in self.columns:
            if c.name == name:
                return c
        return None


@dataclass(frozen=True)
class SchemaSnapshot:
    version: str
    tables: dict  # name -> TableSchema; treated as immutable after load

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "tables": {
                name: {
                    "time_column": t.time_column,
                    "source_ids": sorted(t.source_ids),
                    "columns": [
                        {"name": c.name, "type": c.type, "sensitivity": c.sensitivity}
                        for c in t.columns
                    ],
                }
                for name, t in sorted(self.tables.items())
            },
        }


def load_snapshot(document: dict) -> SchemaSnapshot:
    version = document.get("version")
    if not version or not isinstance(version, str):
        raise SchemaFormatError("snapshot version missing or empty")
    tables: dict = {}
    for name, doc in document.get("tables", {}).items():
        if name in tables:
            raise SchemaFormatError(f"duplicate table {name!r}")
        cols = []
        seen = set()
        for cdoc in doc.get("columns", []):
            cname = cdoc.get("name")
            ctype = cdoc.get("type")
            sens = cdoc.get("sensitivity", "public")
            if not cname:
                raise SchemaFormatError(f"table {name!r}: column without a name")
            if cname in seen:
                raise SchemaFormatError(f"table {name!r}: duplicate column {cname!r}")
            if ctype not in VALUE_TYPES or ctype == "null":
                raise SchemaFormatError(f"table {name!r}: unknown type {ctype!r}")
            if sens not in SENSITIVITIES:
                raise SchemaFormatError(f"table {name!r}: unknown sensitivity {sens!r}")
            seen.add(cname)
            cols.append(ColumnDef(cname, ctype, sens))
        time_column = doc.get("time_column")
        by_name = {c.name: c for c in cols}
        if time_column not in by_name:
            raise SchemaFormatError(f"table {name!r}: time_column {time_column!r} not in columns")
        if by_name[time_column].type != "datetime":
            raise SchemaFormatError(f"table {name!r}: time_column must be datetime")
        tables[name] = TableSchema(
            name=name,
            columns=tuple(cols),
            time_column=time_column,
            source_ids=frozenset(doc.get("source_ids", [])),
        )
    return SchemaSnapshot(version=version, tables=tables)


def snapshot_checksum(snapshot: SchemaSnapshot) -> str:
    return digest_json(snapshot.to_json())


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

PARAM_TYPES = ("string", "long", "timespan", "datetime", "string_list")

_PLACEHOLDER_RE = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")
_SEMVER_RE = re.compile(r"^\d+\.\d+\.\d+$")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    constraint: dict = field(default_factory=dict)  # max | regex | enum


@dataclass(frozen=True)
class TemplateEntry:
    id: str
    owner: str
    version: str
    review_status: str  # draft | approved | deprecated
    description: str
    tactic_tags: tuple
    body: str
    params: tuple  # of ParamSpec
    expected_output_columns: tuple
    tests: tuple  # of {"dataset": fixture id, "expected_rows": int}
    schema_version: str

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name == name:
                return p
        return None


def template_to_json(entry: TemplateEntry) -> dict:
    return {
        "id": entry.id,
        "owner": entry.owner,
        "version": entry.version,
        "review_status": entry.review_status,
        "description": entry.description,
        "tactic_tags": list(entry.tactic_tags),
        "body": entry.body,
        "params": [
            {"name": p.name, "type": p.type, "constraint": dict(p.constraint)}
            for p in entry.params
        ],
        "expected_output_columns": list(entry.expected_output_columns),
        "tests": [dict(t) for t in entry.tests],
        "schema_version": entry.schema_version,
    }


def template_from_json(doc: dict) -> TemplateEntry:
    return TemplateEntry(
        id=doc["id"],
        owner=doc.get("owner", ""),
        version=doc.get("version", "0.0.0"),
        review_status=doc.get("review_status", "draft"),
        description=doc.get("description", ""),
        tactic_tags=tuple(doc.get("tactic_tags", [])),
        body=doc["body"],
        params=tuple(
            ParamSpec(p["name"], p["type"], dict(p.get("constraint", {})))
            for p in doc.get("params", [])
        ),
        expected_output_columns=tuple(doc.get("expected_output_columns", [])),
        tests=tuple(doc.get("tests", [])),
        schema_version=doc.get("schema_version", ""),
    )


def template_checksum(entry: TemplateEntry) -> str:
    return digest_json(template_to_json(entry))


def render_param(value) -> str:
    """Render a validated parameter value as query literal text."""
    if isinstance(value, bool):
        raise ParamTypeError("bool parameters are not supported")
    if isinstance(value, str):
        return quote_string(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, timedelta):
        return format_timespan(value)
    if isinstance(value, datetime):
        return f"datetime({format_datetime(value)})"
    if isinstance(value, (list, tuple)):
        return quote_string(",".join(str(v) for v in value))
    raise ParamTypeError(f"cannot render parameter value {value!r}")


_DUMMY_ANCHOR = datetime(2025, 1, 1)


def dummy_value(spec: ParamSpec):
    if spec.constraint.get("enum"):
        return spec.constraint["enum"][0]
    if spec.type == "string":
        return "placeholder"
    if spec.type == "long":
        return int(spec.constraint.get("max", 10))
    if spec.type == "timespan":
        limit = spec.constraint.get("max")
        return parse_timespan(limit) if limit else timedelta(days=1)
    if spec.type == "datetime":
        return parse_datetime("2025-01-01T00:00:00Z")
    if spec.type == "string_list":
        return ["placeholder"]
    raise ParamTypeError(f"unknown param type {spec.type!r}")


def _check_type(spec: ParamSpec, value) -> None:
    ok = {
        "string": lambda v: isinstance(v, str),
        "long": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "timespan": lambda v: isinstance(v, timedelta),
        "datetime": lambda v: isinstance(v, datetime),
        "string_list": lambda v: isinstance(v, (list, tuple)) and all(isinstance(x, str) for x in v),
    }.get(spec.type)
    if ok is None:
        raise ParamTypeError(f"unknown param type {spec.type!r}")
    if not ok(value):
        raise ParamTypeError(f"parameter {spec.name!r} expects {spec.type}, got {type(value).__name__}")


def _check_constraint(spec: ParamSpec, value) -> None:
    c = spec.constraint
    if "enum" in c and value not in c["enum"]:
        raise ConstraintViolation(spec.name, c["enum"])
    if "max" in c:
        if spec.type == "timespan":
            limit = parse_timespan(c["max"]) if isinstance(c["max"], str) else c["max"]
            if value > limit:
                raise ConstraintViolation(spec.name, format_timespan(limit))
        elif spec.type == "long":
            if value > int(c["max"]):
                raise ConstraintViolation(spec.name, int(c["max"]))
    if "regex" in c and spec.type == "string":
        if re.fullmatch(c["regex"], value) is None:
            raise ConstraintViolation(spec.name, c["regex"])


@dataclass
class BoundQuery:
    template_id: str
    text: str
    ast: object
    params: dict


# ---------------------------------------------------------------------------
# The catalog
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize_terms(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class Catalog:
    def __init__(self, snapshot: SchemaSnapshot):
        self.snapshot = snapshot
        self.templates: dict[str, TemplateEntry] = {}

    # -- registration --------------------------------------------------------

    def register_template(self, entry: TemplateEntry) -> str:
        if entry.id in self.templates:
            raise DuplicateId(entry.id)
        if not entry.owner:
            raise MissingOwner(entry.id)
        if entry.review_status not in ("draft", "approved", "deprecated"):
            raise TemplateFormatError(f"bad review_status {entry.review_status!r}")
        if not _SEMVER_RE.match(entry.version):
            raise TemplateFormatError(f"bad version {entry.version!r}")

        in_body = set(_PLACEHOLDER_RE.findall(entry.body))
        declared = {p.name for p in entry.params}
        if in_body != declared:
            raise PlaceholderMismatch(
                f"body placeholders {sorted(in_body)} != declared params {sorted(declared)}"
            )

        report = self._dummy_report(entry)
        if entry.review_status == "approved":
            if not entry.tests:
                raise TemplateFormatError(f"approved template {entry.id!r} needs at least one test")
            if report.lookback is None or report.row_bound is None:
                raise BodyInvalid(
                    f"approved template {entry.id!r} must bound both lookback and rows",
                    report,
                )
        self.templates[entry.id] = entry
        return entry.id

    def _dummy_report(self, entry: TemplateEntry) -> StaticReport:
        text = self._substitute(entry, {p.name: dummy_value(p) for p in entry.params})
        try:
            ast = parse(text)
        except Exception as exc:
            raise BodyInvalid(f"template body does not parse: {exc}") from exc
        report = analyze(ast, self.snapshot)
        if report.unknown_tables or report.unknown_columns:
            raise BodyInvalid(
                f"template body references unknown names "
                f"(tables {sorted(report.unknown_tables)}, columns {sorted(report.unknown_columns)})",
                report,
            )
        return report

    @staticmethod
    def _substitute(entry: TemplateEntry, values: dict) -> str:
        def repl(m):
            return render_param(values[m.group(1)])

        return _PLACEHOLDER_RE.sub(repl, entry.body)

    # -- binding ---------------------------------------------------------------

    def bind(self, template_id: str, params: dict) -> BoundQuery:
        entry = self.templates.get(template_id)
        if entry is None:
            raise UnknownTemplate(template_id)
        if entry.review_status != "approved":
            raise TemplateNotApproved(template_id)
        declared = {p.name for p in entry.params}
        extra = set(params) - declared
        if extra:
            raise UnknownParam(f"unknown parameters {sorted(extra)}")
        missing = declared - set(params)
        if missing:
            raise UnknownParam(f"missing parameters {sorted(missing)}")
        for spec in entry.params:
            _check_type(spec, params[spec.name])
            _check_constraint(spec, params[spec.name])
        text = self._substitute(entry, params)
        ast = parse(text)
        return BoundQuery(template_id=template_id, text=text, ast=ast, params=dict(params))

    # -- retrieval ---------------------------------------------------------------

    def get(self, template_id: str) -> TemplateEntry:
        entry = self.templates.get(template_id)
        if entry is None:
            raise UnknownTemplate(template_id)
        return entry

    def list_templates(self) -> list[TemplateEntry]:
        return [self.templates[k] for k in sorted(self.templates)]

    def _document_tokens(self, entry: TemplateEntry) -> list[str]:
        parts = [entry.description, " ".join(entry.tactic_tags)]
        try:
            ast = parse(self._substitute(entry, {p.name: dummy_value(p) for p in entry.params}))
            parts.append(ast.source)
        except Exception:
            pass
        return tokenize_terms(" ".join(parts))

    def retrieve(self, query_terms: list, k: int):
        """Top-k templates by tf-idf cosine; ties break on template id."""
        if k <= 0 or not self.templates:
            return []
        ids = sorted(self.templates)
        docs = {tid: self._document_tokens(self.templates[tid]) for tid in ids}
        df: dict[str, int] = {}
        for toks in docs.values():
            for t in set(toks):
                df[t] = df.get(t, 0) + 1
        n_docs = len(ids)

        def idf(term: str) -> float:
            return math.log((1 + n_docs) / (1 + df.get(term, 0))) + 1.0

        q_tokens = []
        for term in query_terms:
            q_tokens.extend(tokenize_terms(str(term)))
        q_tf: dict[str, int] = {}
        for t in q_tokens:
            q_tf[t] = q_tf.get(t, 0) + 1
        q_vec = {t: tf * idf(t) for t, tf in q_tf.items()}
        q_norm = math.sqrt(sum(w * w for w in q_vec.values()))
        if q_norm == 0:
            return []

        hits = []
        for tid in ids:
            tf: dict[str, int] = {}
            for t in docs[tid]:
                tf[t] = tf.get(t, 0) + 1
            vec = {t: c * idf(t) for t, c in tf.items()}
            norm = math.sqrt(sum(w * w for w in vec.values()))
            if norm == 0:
                continue
            dot = sum(w * q_vec[t] for t, w in vec.items() if t in q_vec)
            score = dot / (norm * q_norm)
            if score > 0:
                matched = sorted(t for t in vec if t in q_vec)
                hits.append(RetrievalHit(template_id=tid, score=score, matched_terms=matched))
        hits.sort(key=lambda h: (-h.score, h.template_id))
        return hits[:k]


@dataclass(frozen=True)
class RetrievalHit:
    template_id: str
    score: float
    matched_terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "matched_terms", tuple(self.matched_terms))
