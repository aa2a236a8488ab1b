"""Static analysis of a parsed query against a schema snapshot.

The report feeds policy decisions, so every rule errs toward soundness:
lookback is only credited for conjunctive time predicates that must bind,
and a derived column inherits the sensitivity of every column feeding it.
analyze() never raises; unresolved names are reported, not thrown.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta

from .ast import (
    AggCall, Binary, Call, Expr, Extend, Ident, Literal, Member, Project,
    Query, Summarize, Take, Top, Unary, Where,
)


@dataclass
class StaticReport:
    tables: set[str] = field(default_factory=set)
    columns_read: set[tuple[str, str]] = field(default_factory=set)
    columns_projected: list[str] = field(default_factory=list)
    unknown_tables: set[str] = field(default_factory=set)
    unknown_columns: set[str] = field(default_factory=set)
    lookback: timedelta | None = None
    row_bound: int | None = None
    sensitive_projected: set[str] = field(default_factory=set)
    uses_dynamic: bool = False
    cost_estimate: int = 0

    def to_json(self) -> dict:
        from ..values import format_timespan

        return {
            "tables": sorted(self.tables),
            "columns_read": sorted(f"{t}.{c}" for t, c in self.columns_read),
            "columns_projected": list(self.columns_projected),
            "unknown_tables": sorted(self.unknown_tables),
            "unknown_columns": sorted(self.unknown_columns),
            "lookback": format_timespan(self.lookback) if self.lookback is not None else None,
            "row_bound": self.row_bound,
            "sensitive_projected": sorted(self.sensitive_projected),
            "uses_dynamic": self.uses_dynamic,
            "cost_estimate": self.cost_estimate,
        }


@dataclass
class _Column:
    """One column of the evolving output shape."""
    name: str
    sensitive: bool
    is_time: bool  # still the untouched base time column


class _Analysis:
    def __init__(self, query: Query, snapshot):
        self.query = query
        self.snapshot = snapshot
        self.report = StaticReport(tables={query.source})
        self.lets = dict(query.lets)
        table = getattr(snapshot, "tables", {}).get(query.source)
        if table is None:
            self.report.unknown_tables.add(query.source)
            self.shape: list[_Column] | None = None  # open world, nothing resolvable
            self.time_column = None
        else:
            self.time_column = table.time_column
            self.shape = [
                _Column(c.name, c.sensitivity == "sensitive", c.name == table.time_column)
                for c in table.columns
            ]

    # -- shape helpers -------------------------------------------------------

    def find(self, name: str) -> _Column | None:
        if self.shape is None:
            return None
        for col in self.shape:
            if col.name == name:
                return col
        return None

    def read_column(self, name: str) -> _Column | None:
        """Resolve a column reference in the current shape; report unknowns."""
        if self.shape is None:
            return None
        col = self.find(name)
        if col is None:
            self.report.unknown_columns.add(name)
            return None
        self.report.columns_read.add((self.query.source, name))
        return col

    # -- expression walk -----------------------------------------------------

    def walk(self, expr: Expr) -> bool:
        """Record reads; return whether the value is sensitivity-tainted."""
        if isinstance(expr, Literal):
            return False
        if isinstance(expr, Ident):
            if self.shape is None:
                return False
            col = self.find(expr.name)
            if col is not None:
                self.report.columns_read.add((self.query.source, expr.name))
                return col.sensitive
            if expr.name in self.lets:
                return self.walk(self.lets[expr.name])
            self.report.unknown_columns.add(expr.name)
            return False
        if isinstance(expr, Member):
            self.report.uses_dynamic = True
            return self.walk(expr.base)
        if isinstance(expr, Call):
            if expr.name == "todynamic":
                self.report.uses_dynamic = True
            return any(self.walk(a) for a in list(expr.args))
        if isinstance(expr, Unary):
            return self.walk(expr.operand)
        if isinstance(expr, Binary):
            left = self.walk(expr.left)
            right = self.walk(expr.right)
            return left or right
        return False

    # -- lookback ------------------------------------------------------------

    def const_timespan(self, expr: Expr) -> timedelta | None:
        """Resolve a literal timespan, following let bindings."""
        seen = set()
        while isinstance(expr, Ident):
            if expr.name in seen or expr.name not in self.lets:
                return None
            seen.add(expr.name)
            expr = self.lets[expr.name]
        if isinstance(expr, Literal) and isinstance(expr.value, timedelta):
            return expr.value
        return None

    def conjuncts(self, expr: Expr) -> list[Expr]:
        if isinstance(expr, Binary) and expr.op == "and":
            return self.conjuncts(expr.left) + self.conjuncts(expr.right)
        return [expr]

    def note_lookback(self, predicate: Expr) -> None:
        # Only `<timecol> > ago(x)` / `>= ago(x)` conjuncts are credited;
        # anything under an `or` or `not` might not bind, so it never counts.
        for part in self.conjuncts(predicate):
            if not (isinstance(part, Binary) and part.op in (">", ">=")):
                continue
            left, right = part.left, part.right
            if not (isinstance(left, Ident) and isinstance(right, Call) and right.name == "ago"):
                continue
            col = self.find(left.name)
            if col is None or not col.is_time:
                continue
            if len(right.args) != 1:
                continue
            span = self.const_timespan(right.args[0])
            if span is None or span <= timedelta(0):
                continue
            if self.report.lookback is None or span < self.report.lookback:
                self.report.lookback = span

    # -- operators -----------------------------------------------------------

    def run(self) -> StaticReport:
        for op in self.query.pipeline:
            if isinstance(op, Where):
                self.walk(op.predicate)
                self.note_lookback(op.predicate)
            elif isinstance(op, Extend):
                self.apply_extend(op)
            elif isinstance(op, Project):
                self.apply_project(op)
            elif isinstance(op, Summarize):
                self.apply_summarize(op)
            elif isinstance(op, Top):
                self.read_column(op.column)
                self.note_bound(op.count)
            elif isinstance(op, Take):
                self.note_bound(op.count)
        if self.shape is not None:
            self.report.columns_projected = [c.name for c in self.shape]
            self.report.sensitive_projected = {c.name for c in self.shape if c.sensitive}
        return self.report

    def note_bound(self, count: int) -> None:
        if self.report.row_bound is None or count < self.report.row_bound:
            self.report.row_bound = count

    def apply_extend(self, op: Extend) -> None:
        for name, expr in op.assignments:
            tainted = self.walk(expr)
            if self.shape is None:
                continue
            existing = self.find(name)
            if existing is not None:
                existing.sensitive = tainted
                existing.is_time = False
            else:
                self.shape.append(_Column(name, tainted, False))

    def apply_project(self, op: Project) -> None:
        if self.shape is None:
            return
        new_shape = []
        for name in op.columns:
            col = self.read_column(name)
            new_shape.append(col if col is not None else _Column(name, False, False))
        self.shape = new_shape

    def apply_summarize(self, op: Summarize) -> None:
        if self.shape is None:
            for agg in op.aggregates:
                if agg.arg is not None:
                    self.walk(agg.arg)
            return
        new_shape = []
        for name in op.by:
            col = self.read_column(name)
            new_shape.append(col if col is not None else _Column(name, False, False))
        for agg in op.aggregates:
            tainted = self.walk(agg.arg) if agg.arg is not None else False
            new_shape.append(_Column(agg.name, tainted, False))
        self.shape = new_shape


def analyze(query: Query, snapshot) -> StaticReport:
    """Build a StaticReport for `query` against `snapshot`.

    The snapshot must expose `tables: {name: TableSchema}` where each schema
    has `columns` (objects with name/type/sensitivity) and `time_column`.
    """
    return _Analysis(query, snapshot).run()
