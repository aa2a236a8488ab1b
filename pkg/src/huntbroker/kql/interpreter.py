"""Reference interpreter for the query subset.

Semantics, pinned so an independent oracle can reproduce them:

* Null collapses three-valued logic: any comparison with a Null operand is
  false, including negated forms (`null !contains "x"` is false).
* Equality (==, !=) is case-sensitive for strings; values of different type
  families are simply unequal. Order comparisons across families are a
  TypeMismatch.
* contains/startswith/endswith/has compare case-insensitively; `has` matches
  a whole term bounded by non-alphanumerics. An empty needle never matches.
* Arithmetic with a Null operand yields Null; any division by zero yields
  Null for that cell and never aborts the query.
* tostring(null) = "". todynamic parses JSON, returning the input string
  unchanged when it is not valid JSON. Member access on anything that is not
  an object yields Null.
* Top sorts stably with nulls last in both directions; Take keeps the
  current order. summarize with no `by` always yields exactly one row.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timedelta

from ..dataset import Dataset
from ..values import format_datetime, format_timespan, value_type_name
from .ast import (
    AggCall, Binary, Call, Expr, Extend, Ident, Literal, Member, Project,
    Query, Summarize, Take, Top, Unary, Where,
)
from .errors import TypeMismatch, UnknownTable


@dataclass
class ResultTable:
    columns: list[tuple[str, str]]  # (name, type name)
    rows: list[tuple]
    truncated: bool = False

    @property
    def column_names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def to_json(self) -> dict:
        from ..values import value_to_json

        return {
            "columns": [list(c) for c in self.columns],
            "rows": [[value_to_json(v) for v in row] for row in self.rows],
            "truncated": self.truncated,
        }


# -- value helpers -----------------------------------------------------------

def _family(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, datetime):
        return "datetime"
    if isinstance(v, timedelta):
        return "timespan"
    if isinstance(v, (dict, list)):
        return "dynamic"
    raise TypeMismatch(f"unsupported value {v!r}")


def _equal(left, right) -> bool:
    if _family(left) != _family(right):
        return False
    return left == right


_ORDERABLE = {"number", "string", "datetime", "timespan"}


def _order(op: str, left, right) -> bool:
    fl, fr = _family(left), _family(right)
    if fl != fr or fl not in _ORDERABLE:
        raise TypeMismatch(f"cannot order {fl} against {fr}")
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    if op == "<":
        return left < right
    return left <= right


def _has_term(haystack: str, term: str) -> bool:
    if not term:
        return False
    pattern = r"(?<![A-Za-z0-9])" + re.escape(term) + r"(?![A-Za-z0-9])"
    return re.search(pattern, haystack, re.IGNORECASE) is not None


def _string_op(op: str, left, right) -> bool:
    if left is None or right is None:
        return False
    if not isinstance(left, str) or not isinstance(right, str):
        raise TypeMismatch(f"string operator {op!r} needs string operands")
    if op in ("contains", "!contains"):
        hit = bool(right) and right.lower() in left.lower()
        return not hit if op == "!contains" else hit
    if op == "startswith":
        return bool(right) and left.lower().startswith(right.lower())
    if op in ("endswith", "!endswith"):
        hit = bool(right) and left.lower().endswith(right.lower())
        return not hit if op == "!endswith" else hit
    return _has_term(left, right)


def _arith(op: str, left, right):
    if left is None or right is None:
        return None
    fl, fr = _family(left), _family(right)
    if fl == "number" and fr == "number":
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if right == 0:
            return None
        return left / right
    if op == "+" and fl == "datetime" and fr == "timespan":
        return left + right
    if op == "+" and fl == "timespan" and fr == "datetime":
        return right + left
    if op == "-" and fl == "datetime" and fr == "timespan":
        return left - right
    if op == "-" and fl == "datetime" and fr == "datetime":
        return left - right
    if op in ("+", "-") and fl == "timespan" and fr == "timespan":
        return left + right if op == "+" else left - right
    raise TypeMismatch(f"operator {op!r} not defined for {fl} and {fr}")


def _to_string(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, datetime):
        return format_datetime(v)
    if isinstance(v, timedelta):
        return format_timespan(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return str(v)


def _to_dynamic(v):
    if v is None or isinstance(v, (dict, list)):
        return v
    if not isinstance(v, str):
        raise TypeMismatch("todynamic expects a string")
    try:
        return json.loads(v)
    except ValueError:
        return v


# -- expression evaluation ----------------------------------------------------

class _Scope:
    def __init__(self, lets: dict, now: datetime):
        self.lets = lets
        self.now = now


def _call(scope: _Scope, name: str, args: list):
    if name == "now":
        if args:
            raise TypeMismatch("now() takes no arguments")
        return scope.now
    if len(args) != 1:
        raise TypeMismatch(f"{name}() takes one argument")
    v = args[0]
    if name == "ago":
        if v is None:
            return None
        if not isinstance(v, timedelta):
            raise TypeMismatch("ago() expects a timespan")
        return scope.now - v
    if name == "tostring":
        return _to_string(v)
    if name == "todynamic":
        return _to_dynamic(v)
    if name == "tolower":
        if v is None:
            return None
        if not isinstance(v, str):
            raise TypeMismatch("tolower() expects a string")
        return v.lower()
    if name == "strlen":
        if v is None:
            return None
        if not isinstance(v, str):
            raise TypeMismatch("strlen() expects a string")
        return len(v)
    raise TypeMismatch(f"unknown function {name!r}")


def _eval(expr: Expr, row: dict | None, scope: _Scope):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Ident):
        if row is not None and expr.name in row:
            return row[expr.name]
        if expr.name in scope.lets:
            return scope.lets[expr.name]
        raise TypeMismatch(f"unknown name {expr.name!r}")
    if isinstance(expr, Member):
        base = _eval(expr.base, row, scope)
        if isinstance(base, dict):
            return base.get(expr.name)
        return None
    if isinstance(expr, Call):
        args = [_eval(a, row, scope) for a in expr.args]
        return _call(scope, expr.name, args)
    if isinstance(expr, Unary):
        v = _eval(expr.operand, row, scope)
        if expr.op == "not":
            if v is None:
                return None
            if not isinstance(v, bool):
                raise TypeMismatch("not expects a boolean")
            return not v
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float, timedelta)):
            raise TypeMismatch("unary - expects a number or timespan")
        return -v
    if isinstance(expr, Binary):
        op = expr.op
        if op in ("and", "or"):
            left = _eval(expr.left, row, scope)
            right = _eval(expr.right, row, scope)
            lv = left if isinstance(left, bool) else False
            rv = right if isinstance(right, bool) else False
            if left is not None and not isinstance(left, bool):
                raise TypeMismatch(f"{op} expects booleans")
            if right is not None and not isinstance(right, bool):
                raise TypeMismatch(f"{op} expects booleans")
            return (lv and rv) if op == "and" else (lv or rv)
        left = _eval(expr.left, row, scope)
        right = _eval(expr.right, row, scope)
        if op in ("==", "!="):
            if left is None or right is None:
                return False
            return _equal(left, right) if op == "==" else not _equal(left, right)
        if op in (">", ">=", "<", "<="):
            if left is None or right is None:
                return False
            return _order(op, left, right)
        if op in ("contains", "!contains", "startswith", "endswith", "!endswith", "has"):
            return _string_op(op, left, right)
        return _arith(op, left, right)
    raise TypeMismatch(f"cannot evaluate {expr!r}")


def _truthy(value) -> bool:
    if value is None:
        return False
    if not isinstance(value, bool):
        raise TypeMismatch("where predicate must be boolean")
    return value


# -- operator application ------------------------------------------------------

def _group_key(values: tuple):
    # dynamics are unhashable; encode to canonical text for the key
    return tuple(
        ("dyn", json.dumps(v, sort_keys=True, separators=(",", ":"), ensure_ascii=False))
        if isinstance(v, (dict, list)) else (type(v).__name__, v)
        for v in values
    )


def _aggregate(agg: AggCall, rows: list[dict], scope: _Scope):
    if agg.fn == "count":
        return len(rows)
    if agg.fn == "countif":
        if agg.arg is None:
            raise TypeMismatch("countif needs a predicate")
        return sum(1 for r in rows if _truthy(_eval(agg.arg, r, scope)))
    if agg.arg is None:
        raise TypeMismatch(f"{agg.fn} needs an argument")
    values = [v for r in rows if (v := _eval(agg.arg, r, scope)) is not None]
    if not values:
        return None
    best = values[0]
    for v in values[1:]:
        if _order(">" if agg.fn == "max" else "<", v, best):
            best = v
    return best


def _sort_for_top(rows: list[dict], column: str, descending: bool) -> list[dict]:
    present = [r for r in rows if r.get(column) is not None]
    absent = [r for r in rows if r.get(column) is None]
    try:
        ordered = sorted(present, key=lambda r: r[column], reverse=descending)
    except TypeError as exc:
        raise TypeMismatch(f"cannot sort column {column!r}: {exc}") from None
    return ordered + absent


def execute(query: Query, dataset: Dataset, now: datetime) -> ResultTable:
    """Run `query` over `dataset` with `now` as the clock. Read-only."""
    table = dataset.table(query.source)
    if table is None:
        raise UnknownTable(query.source)

    scope = _Scope({}, now)
    for name, expr in query.lets:
        scope.lets[name] = _eval(expr, None, scope)

    columns = list(table.columns)
    rows = [dict(zip(columns, row)) for row in table.rows]
    truncated = False

    for op in query.pipeline:
        if isinstance(op, Where):
            rows = [r for r in rows if _truthy(_eval(op.predicate, r, scope))]
        elif isinstance(op, Extend):
            for r in rows:
                for name, expr in op.assignments:
                    r[name] = _eval(expr, r, scope)
            for name, _ in op.assignments:
                if name not in columns:
                    columns.append(name)
        elif isinstance(op, Project):
            for name in op.columns:
                if name not in columns:
                    raise TypeMismatch(f"unknown column {name!r} in project")
            columns = list(op.columns)
            rows = [{c: r[c] for c in columns} for r in rows]
        elif isinstance(op, Summarize):
            columns, rows = _summarize(op, columns, rows, scope)
        elif isinstance(op, Top):
            if op.column not in columns:
                raise TypeMismatch(f"unknown column {op.column!r} in top")
            rows = _sort_for_top(rows, op.column, op.descending)
            if len(rows) > op.count:
                rows = rows[: op.count]
                truncated = True
        elif isinstance(op, Take):
            if len(rows) > op.count:
                rows = rows[: op.count]
                truncated = True
        else:
            raise TypeMismatch(f"unsupported operator {op!r}")

    return ResultTable(
        columns=[(c, _column_type(c, rows)) for c in columns],
        rows=[tuple(r[c] for c in columns) for r in rows],
        truncated=truncated,
    )


def _summarize(op: Summarize, columns: list[str], rows: list[dict], scope: _Scope):
    for name in op.by:
        if name not in columns:
            raise TypeMismatch(f"unknown column {name!r} in summarize by")
    out_columns = list(op.by) + [agg.name for agg in op.aggregates]
    groups: dict = {}
    order: list = []
    if op.by:
        for r in rows:
            key_values = tuple(r[c] for c in op.by)
            key = _group_key(key_values)
            if key not in groups:
                groups[key] = (key_values, [])
                order.append(key)
            groups[key][1].append(r)
    else:
        groups[()] = ((), list(rows))
        order.append(())
    out_rows = []
    for key in order:
        key_values, members = groups[key]
        row = dict(zip(op.by, key_values))
        for agg in op.aggregates:
            row[agg.name] = _aggregate(agg, members, scope)
        out_rows.append(row)
    return out_columns, out_rows


def _column_type(name: str, rows: list[dict]) -> str:
    for r in rows:
        if r.get(name) is not None:
            return value_type_name(r[name])
    return "null"
