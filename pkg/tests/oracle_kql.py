"""Naive reference executor used as an oracle in tests.

Applies every operator by direct definition over row dictionaries, written
independently of huntbroker.kql.interpreter: it shares only the AST node
shapes and the documented semantics (null comparisons false, negated string
ops also false on null, tostring(null)="", division by zero yields null,
top sorts nulls last, summarize without `by` yields exactly one row).
"""

from __future__ import annotations

import json
import re
from datetime import datetime, timedelta

from huntbroker.kql import ast as A


class OracleError(Exception):
    pass


def _kind(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "num"
    if isinstance(v, str):
        return "str"
    if isinstance(v, datetime):
        return "dt"
    if isinstance(v, timedelta):
        return "ts"
    if isinstance(v, (dict, list)):
        return "dyn"
    raise OracleError(f"bad value {v!r}")


def eval_expr(e, row, lets, now):
    if isinstance(e, A.Literal):
        return e.value
    if isinstance(e, A.Ident):
        if row is not None and e.name in row:
            return row[e.name]
        if e.name in lets:
            return lets[e.name]
        raise OracleError(f"name {e.name}")
    if isinstance(e, A.Member):
        base = eval_expr(e.base, row, lets, now)
        return base.get(e.name) if isinstance(base, dict) else None
    if isinstance(e, A.Call):
        vals = [eval_expr(a, row, lets, now) for a in e.args]
        return call_fn(e.name, vals, now)
    if isinstance(e, A.Unary):
        v = eval_expr(e.operand, row, lets, now)
        if e.op == "not":
            if v is None:
                return None
            if not isinstance(v, bool):
                raise OracleError("not")
            return not v
        if v is None:
            return None
        if isinstance(v, bool) or _kind(v) not in ("num", "ts"):
            raise OracleError("neg")
        return -v
    if isinstance(e, A.Binary):
        l = eval_expr(e.left, row, lets, now)
        r = eval_expr(e.right, row, lets, now)
        return binary(e.op, l, r)
    raise OracleError(f"expr {e!r}")


def call_fn(name, vals, now):
    if name == "now":
        if vals:
            raise OracleError("now args")
        return now
    if len(vals) != 1:
        raise OracleError(f"{name} arity")
    v = vals[0]
    if name == "ago":
        if v is None:
            return None
        if not isinstance(v, timedelta):
            raise OracleError("ago")
        return now - v
    if name == "tostring":
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return v
        if isinstance(v, datetime):
            return v.strftime("%Y-%m-%dT%H:%M:%S") + f".{v.microsecond:06d}Z"
        if isinstance(v, timedelta):
            return span_text(v)
        if isinstance(v, (dict, list)):
            return json.dumps(v, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return str(v)
    if name == "todynamic":
        if v is None or isinstance(v, (dict, list)):
            return v
        if not isinstance(v, str):
            raise OracleError("todynamic")
        try:
            return json.loads(v)
        except ValueError:
            return v
    if name == "tolower":
        if v is None:
            return None
        if not isinstance(v, str):
            raise OracleError("tolower")
        return v.lower()
    if name == "strlen":
        if v is None:
            return None
        if not isinstance(v, str):
            raise OracleError("strlen")
        return len(v)
    raise OracleError(f"fn {name}")


def span_text(v: timedelta) -> str:
    us = (v.days * 86_400 + v.seconds) * 1_000_000 + v.microseconds
    sign = "-" if us < 0 else ""
    mag = abs(us)
    for unit, width in (("d", 86_400_000_000), ("h", 3_600_000_000), ("m", 60_000_000), ("s", 1_000_000)):
        if mag % width == 0:
            return f"{sign}{mag // width}{unit}"
    return f"{sign}{mag // 1_000_000}s"


def binary(op, l, r):
    if op in ("and", "or"):
        for v in (l, r):
            if v is not None and not isinstance(v, bool):
                raise OracleError(op)
        lb = l is True
        rb = r is True
        return (lb and rb) if op == "and" else (lb or rb)
    if op in ("==", "!="):
        if l is None or r is None:
            return False
        same = _kind(l) == _kind(r) and l == r
        return same if op == "==" else not same
    if op in (">", ">=", "<", "<="):
        if l is None or r is None:
            return False
        if _kind(l) != _kind(r) or _kind(l) not in ("num", "str", "dt", "ts"):
            raise OracleError(op)
        return {"<": l < r, "<=": l <= r, ">": l > r, ">=": l >= r}[op]
    if op in ("contains", "!contains", "startswith", "endswith", "!endswith", "has"):
        if l is None or r is None:
            return False
        if not isinstance(l, str) or not isinstance(r, str):
            raise OracleError(op)
        ll, rr = l.lower(), r.lower()
        if op == "contains":
            return bool(rr) and rr in ll
        if op == "!contains":
            return not (bool(rr) and rr in ll)
        if op == "startswith":
            return bool(rr) and ll.startswith(rr)
        if op == "endswith":
            return bool(rr) and ll.endswith(rr)
        if op == "!endswith":
            return not (bool(rr) and ll.endswith(rr))
        if not r:
            return False
        return re.search(r"(?<![0-9A-Za-z])" + re.escape(r) + r"(?![0-9A-Za-z])", l, re.I) is not None
    # arithmetic
    if l is None or r is None:
        return None
    kl, kr = _kind(l), _kind(r)
    if kl == "num" and kr == "num":
        if op == "+":
            return l + r
        if op == "-":
            return l - r
        if op == "*":
            return l * r
        if op == "/":
            return None if r == 0 else l / r
    if op == "+" and kl == "dt" and kr == "ts":
        return l + r
    if op == "+" and kl == "ts" and kr == "dt":
        return r + l
    if op == "-" and kl == "dt" and kr == "ts":
        return l - r
    if op == "-" and kl == "dt" and kr == "dt":
        return l - r
    if op in ("+", "-") and kl == "ts" and kr == "ts":
        return l + r if op == "+" else l - r
    raise OracleError(f"arith {op} {kl} {kr}")


def want_bool(v):
    if v is None:
        return False
    if not isinstance(v, bool):
        raise OracleError("predicate")
    return v


def run_query(query, tables, now):
    """tables: {name: (columns, rows)}. Returns (columns, row tuples, truncated)."""
    if query.source not in tables:
        raise OracleError(f"table {query.source}")
    lets = {}
    for name, expr in query.lets:
        lets[name] = eval_expr(expr, None, lets, now)

    cols, raw = tables[query.source]
    cols = list(cols)
    rows = [dict(zip(cols, r)) for r in raw]
    truncated = False

    for op in query.pipeline:
        if isinstance(op, A.Where):
            rows = [r for r in rows if want_bool(eval_expr(op.predicate, r, lets, now))]
        elif isinstance(op, A.Extend):
            for r in rows:
                for name, expr in op.assignments:
                    r[name] = eval_expr(expr, r, lets, now)
            for name, _ in op.assignments:
                if name not in cols:
                    cols.append(name)
        elif isinstance(op, A.Project):
            for c in op.columns:
                if c not in cols:
                    raise OracleError(f"project {c}")
            cols = list(op.columns)
            rows = [{c: r[c] for c in cols} for r in rows]
        elif isinstance(op, A.Summarize):
            cols, rows = summarize(op, cols, rows, lets, now)
        elif isinstance(op, A.Top):
            if op.column not in cols:
                raise OracleError(f"top {op.column}")
            nulls = [r for r in rows if r[op.column] is None]
            present = [r for r in rows if r[op.column] is not None]
            present.sort(key=lambda r: r[op.column], reverse=op.descending)
            rows = present + nulls
            if len(rows) > op.count:
                rows = rows[: op.count]
                truncated = True
        elif isinstance(op, A.Take):
            if len(rows) > op.count:
                rows = rows[: op.count]
                truncated = True
        else:
            raise OracleError(f"op {op!r}")

    return cols, [tuple(r[c] for c in cols) for r in rows], truncated


def summarize(op, cols, rows, lets, now):
    for c in op.by:
        if c not in cols:
            raise OracleError(f"by {c}")
    keyed = []
    seen = {}
    for r in rows:
        kv = tuple(r[c] for c in op.by)
        tag = json.dumps([_enc(v) for v in kv], sort_keys=True)
        if tag not in seen:
            seen[tag] = (kv, [])
            keyed.append(tag)
        seen[tag][1].append(r)
    if not op.by:
        if not keyed:
            keyed = ["empty"]
            seen["empty"] = ((), [])
    out = []
    for tag in keyed:
        kv, members = seen[tag]
        row = dict(zip(op.by, kv))
        for agg in op.aggregates:
            row[agg.name] = run_agg(agg, members, lets, now)
        out.append(row)
    return list(op.by) + [a.name for a in op.aggregates], out


def _enc(v):
    if isinstance(v, datetime):
        return ["dt", v.isoformat()]
    if isinstance(v, timedelta):
        return ["ts", v.total_seconds()]
    if isinstance(v, bool):
        return ["b", v]
    if isinstance(v, (int, float)):
        return ["n", repr(v)]
    if isinstance(v, (dict, list)):
        return ["dyn", json.dumps(v, sort_keys=True)]
    if v is None:
        return ["null"]
    return ["s", v]


def run_agg(agg, members, lets, now):
    if agg.fn == "count":
        return len(members)
    if agg.fn == "countif":
        n = 0
        for r in members:
            if want_bool(eval_expr(agg.arg, r, lets, now)):
                n += 1
        return n
    vals = []
    for r in members:
        v = eval_expr(agg.arg, r, lets, now)
        if v is not None:
            vals.append(v)
    if not vals:
        return None
    best = vals[0]
    for v in vals[1:]:
        if _kind(v) != _kind(best) or _kind(v) not in ("num", "str", "dt", "ts"):
            raise OracleError("minmax")
        if (agg.fn == "max" and v > best) or (agg.fn == "min" and v < best):
            best = v
    return best
