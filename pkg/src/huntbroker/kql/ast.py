"""AST for the query subset: let bindings plus a pipeline of tabular operators.

Nodes are frozen dataclasses so structural equality works out of the box;
`unparse` renders an AST back to query text that reparses to an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta

from ..values import format_datetime, format_timespan


# ---------------------------------------------------------------------------
# Scalar expressions
# ---------------------------------------------------------------------------

class Expr:
    pass


@dataclass(frozen=True)
class Literal(Expr):
    value: object  # None | bool | int | float | str | datetime | timedelta


@dataclass(frozen=True)
class Ident(Expr):
    """Bare identifier: a column reference or a let-binding, resolved later."""
    name: str


@dataclass(frozen=True)
class Member(Expr):
    """Dot access into a dynamic value, e.g. Ext.TaskName."""
    base: Expr
    name: str


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" | "not"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    """Binary operator node.

    op is one of the arithmetic (+ - * /), comparison (== != > >= < <=),
    string (contains !contains startswith endswith !endswith has) or
    boolean (and or) operators.
    """
    op: str
    left: Expr
    right: Expr


STRING_OPS = ("contains", "!contains", "startswith", "endswith", "!endswith", "has")
COMPARISON_OPS = ("==", "!=", ">", ">=", "<", "<=")


# ---------------------------------------------------------------------------
# Tabular operators
# ---------------------------------------------------------------------------

class Operator:
    pass


@dataclass(frozen=True)
class Where(Operator):
    predicate: Expr


@dataclass(frozen=True)
class Extend(Operator):
    assignments: tuple[tuple[str, Expr], ...]


@dataclass(frozen=True)
class Project(Operator):
    columns: tuple[str, ...]


@dataclass(frozen=True)
class AggCall:
    """One aggregate in a summarize stage; name is the output column."""
    name: str
    fn: str  # count | countif | min | max
    arg: Expr | None = None


@dataclass(frozen=True)
class Summarize(Operator):
    aggregates: tuple[AggCall, ...]
    by: tuple[str, ...] = ()


@dataclass(frozen=True)
class Top(Operator):
    count: int
    column: str
    descending: bool = True


@dataclass(frozen=True)
class Take(Operator):
    count: int


@dataclass(frozen=True)
class Query:
    source: str
    lets: tuple[tuple[str, Expr], ...] = ()
    pipeline: tuple[Operator, ...] = ()


# ---------------------------------------------------------------------------
# Unparser
# ---------------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def quote_string(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def unparse_expr(expr: Expr) -> str:
    if isinstance(expr, Literal):
        v = expr.value
        if v is None:
            return "null"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return quote_string(v)
        if isinstance(v, timedelta):
            return format_timespan(v)
        if isinstance(v, datetime):
            return f"datetime({format_datetime(v)})"
        return repr(v)
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, Member):
        return f"{unparse_expr(expr.base)}.{expr.name}"
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(unparse_expr(a) for a in expr.args)})"
    if isinstance(expr, Unary):
        if expr.op == "not":
            return f"not ({unparse_expr(expr.operand)})"
        return f"-({unparse_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({unparse_expr(expr.left)} {expr.op} {unparse_expr(expr.right)})"
    raise TypeError(f"not an expression node: {expr!r}")


def _unparse_operator(op: Operator) -> str:
    if isinstance(op, Where):
        return f"where {unparse_expr(op.predicate)}"
    if isinstance(op, Extend):
        parts = ", ".join(f"{n} = {unparse_expr(e)}" for n, e in op.assignments)
        return f"extend {parts}"
    if isinstance(op, Project):
        return f"project {', '.join(op.columns)}"
    if isinstance(op, Summarize):
        aggs = []
        for agg in op.aggregates:
            arg = unparse_expr(agg.arg) if agg.arg is not None else ""
            aggs.append(f"{agg.name} = {agg.fn}({arg})")
        text = f"summarize {', '.join(aggs)}"
        if op.by:
            text += f" by {', '.join(op.by)}"
        return text
    if isinstance(op, Top):
        direction = "desc" if op.descending else "asc"
        return f"top {op.count} by {op.column} {direction}"
    if isinstance(op, Take):
        return f"take {op.count}"
    raise TypeError(f"not an operator node: {op!r}")


def unparse(query: Query) -> str:
    lines = [f"let {name} = {unparse_expr(expr)};" for name, expr in query.lets]
    lines.append(query.source)
    lines.extend(f"| {_unparse_operator(op)}" for op in query.pipeline)
    return "\n".join(lines)
