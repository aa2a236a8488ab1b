"""Random well-typed tables and queries for differential testing.

The generator tracks column kinds through the pipeline so emitted queries
never hit TypeMismatch; nulls, empty strings, case variants, and token
boundary strings are sprinkled in deliberately because those are where the
semantics have edges.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone

from huntbroker.dataset import Dataset, Table
from huntbroker.kql import ast as A

ANCHOR = datetime(2025, 6, 1, 12, 0, 0, tzinfo=timezone.utc)

WORDS = [
    "run task", "schtasks.exe /create", "Admin", "aDmIn", "backup$",
    "ScheduledTaskCreated", "scheduled", "Task Run Daily", "svc-backup",
    "", "cmd.exe", "powershell -enc", "user01", "USER01", "x",
]
NEEDLES = ["run", "RUN", "task", "Task", "admin", "$", "cht", "schtasks", "", "x", "user01"]

ORDERABLE = ("long", "real", "string", "datetime")


def _rand_value(rng: random.Random, kind: str):
    if kind == "datetime":
        return ANCHOR - timedelta(seconds=rng.randrange(0, 30 * 86_400), microseconds=rng.choice([0, 0, 250_000]))
    if kind == "long":
        return None if rng.random() < 0.15 else rng.randrange(-50, 51)
    if kind == "real":
        return None if rng.random() < 0.15 else round(rng.uniform(-100.0, 100.0), 3)
    if kind == "string":
        return None if rng.random() < 0.15 else rng.choice(WORDS)
    if kind == "json":
        if rng.random() < 0.2:
            return "not json at all"
        doc = {"k": rng.randrange(5), "name": rng.choice(WORDS)}
        if rng.random() < 0.5:
            doc["nested"] = {"inner": rng.choice(WORDS)}
        return json.dumps(doc)
    raise AssertionError(kind)


def random_table(rng: random.Random, name: str = "T", max_rows: int = 1000):
    """Returns (Table, shape) where shape is [(column, kind)]."""
    shape = [("Timestamp", "datetime")]
    pool = [
        ("EventId", "long"), ("Score", "real"), ("ActionType", "string"),
        ("DeviceName", "string"), ("Payload", "json"), ("Extra", "string"),
        ("Count2", "long"),
    ]
    for col in rng.sample(pool, rng.randrange(3, len(pool) + 1)):
        shape.append(col)
    n_rows = rng.choice([0, 1, rng.randrange(2, max_rows + 1)])
    rows = [tuple(_rand_value(rng, kind) for _, kind in shape) for _ in range(n_rows)]
    table = Table(name=name, columns=[c for c, _ in shape], rows=rows)
    # json columns hold strings as far as the type system is concerned
    kinds = [(c, "string" if k == "json" else k) for c, k in shape]
    json_cols = [c for c, k in shape if k == "json"]
    return table, kinds, json_cols


def _pick(rng, shape, kinds):
    options = [c for c, k in shape if k in kinds]
    return rng.choice(options) if options else None


def _bool_expr(rng: random.Random, shape, json_cols, depth: int = 0) -> A.Expr | None:
    if depth < 2 and rng.random() < 0.35:
        left = _bool_expr(rng, shape, json_cols, depth + 1)
        right = _bool_expr(rng, shape, json_cols, depth + 1)
        if left is None or right is None:
            return left or right
        op = rng.choice(["and", "or"])
        node = A.Binary(op, left, right)
        return A.Unary("not", node) if rng.random() < 0.2 else node
    choice = rng.randrange(4)
    if choice == 0:
        col = _pick(rng, shape, ("long", "real"))
        if col is not None:
            kind = dict(shape)[col]
            lit = rng.randrange(-40, 41) if kind == "long" else round(rng.uniform(-80, 80), 2)
            op = rng.choice(["==", "!=", ">", ">=", "<", "<="])
            return A.Binary(op, A.Ident(col), A.Literal(lit))
    if choice == 1:
        col = _pick(rng, shape, ("string",))
        if col is not None:
            op = rng.choice(list(A.STRING_OPS) + ["==", "!="])
            return A.Binary(op, A.Ident(col), A.Literal(rng.choice(NEEDLES)))
    if choice == 2:
        col = _pick(rng, shape, ("datetime",))
        if col is not None:
            span = timedelta(**{rng.choice(["days", "hours", "minutes"]): rng.randrange(1, 20)})
            op = rng.choice([">", ">="])
            return A.Binary(op, A.Ident(col), A.Call("ago", (A.Literal(span),)))
    col = _pick(rng, shape, ("string",))
    if col is not None:
        return A.Binary(rng.choice(["==", "!="]), A.Ident(col), A.Literal(rng.choice(WORDS)))
    col = shape[0][0]
    return A.Binary("!=", A.Ident(col), A.Ident(col))


def _extend_expr(rng: random.Random, shape, json_cols):
    """Returns (expr, result kind) or None."""
    roll = rng.randrange(6)
    if roll == 0:
        a = _pick(rng, shape, ("long", "real"))
        b = _pick(rng, shape, ("long", "real"))
        if a and b:
            op = rng.choice(["+", "-", "*", "/"])
            kind = "real" if op == "/" or "real" in (dict(shape)[a], dict(shape)[b]) else "long"
            return A.Binary(op, A.Ident(a), A.Ident(b)), kind
    if roll == 1:
        col = _pick(rng, shape, ("string",))
        if col:
            return A.Call("strlen", (A.Ident(col),)), "long"
    if roll == 2:
        col = _pick(rng, shape, ("string",))
        if col:
            return A.Call("tolower", (A.Ident(col),)), "string"
    if roll == 3:
        live_json = [c for c in json_cols if any(c == n for n, _ in shape)]
        if live_json:
            col = rng.choice(live_json)
            member = rng.choice(["name", "k", "missing"])
            expr = A.Call("tostring", (A.Member(A.Call("todynamic", (A.Ident(col),)), member),))
            return expr, "string"
    if roll == 4:
        col = _pick(rng, shape, ("long", "real"))
        if col:
            lit = rng.randrange(-5, 6)
            return A.Binary(rng.choice(["+", "*"]), A.Ident(col), A.Literal(lit)), dict(shape)[col]
    col = rng.choice(shape)[0]
    return A.Call("tostring", (A.Ident(col),)), "string"


def random_query(rng: random.Random, table_name: str, shape, json_cols) -> A.Query:
    shape = list(shape)
    json_cols = list(json_cols)
    lets: list[tuple[str, A.Expr]] = []
    if rng.random() < 0.3:
        lets.append(("Span", A.Literal(timedelta(days=rng.randrange(1, 15)))))
    pipeline: list[A.Operator] = []
    fresh = 0
    for _ in range(rng.randrange(0, 6)):
        op_kind = rng.choice(["where", "where", "extend", "project", "summarize", "top", "take"])
        if op_kind == "where":
            if lets and rng.random() < 0.5:
                col = _pick(rng, shape, ("datetime",))
                if col is not None:
                    pipeline.append(A.Where(A.Binary(">", A.Ident(col), A.Call("ago", (A.Ident("Span"),)))))
                    continue
            pred = _bool_expr(rng, shape, json_cols)
            if pred is not None:
                pipeline.append(A.Where(pred))
        elif op_kind == "extend":
            assignments = []
            for _ in range(rng.randrange(1, 3)):
                made = _extend_expr(rng, shape, json_cols)
                if made is None:
                    continue
                expr, kind = made
                if rng.random() < 0.2 and shape:
                    name = rng.choice(shape)[0]
                    shape = [(n, kind if n == name else k) for n, k in shape]
                    json_cols = [c for c in json_cols if c != name]
                else:
                    fresh += 1
                    name = f"X{fresh}"
                    shape.append((name, kind))
                assignments.append((name, expr))
            if assignments:
                pipeline.append(A.Extend(tuple(assignments)))
        elif op_kind == "project":
            k = rng.randrange(1, len(shape) + 1)
            cols = rng.sample([c for c, _ in shape], k)
            pipeline.append(A.Project(tuple(cols)))
            keep = dict(shape)
            shape = [(c, keep[c]) for c in cols]
            json_cols = [c for c in json_cols if c in cols]
        elif op_kind == "summarize":
            groupable = [c for c, k in shape if k in ("string", "long", "datetime")]
            by = ()
            if groupable and rng.random() < 0.6:
                by = tuple(rng.sample(groupable, k=min(rng.randrange(1, 3), len(groupable))))
            aggs = [A.AggCall("count_", "count", None)]
            target = _pick(rng, shape, ORDERABLE)
            if target is not None and rng.random() < 0.7:
                fn = rng.choice(["min", "max"])
                aggs.append(A.AggCall(f"{fn}_{target}", fn, A.Ident(target)))
            pred_col = _pick(rng, shape, ("long", "real"))
            if pred_col is not None and rng.random() < 0.4:
                aggs.append(A.AggCall("hits", "countif", A.Binary(">", A.Ident(pred_col), A.Literal(0))))
            pipeline.append(A.Summarize(tuple(aggs), by))
            keep = dict(shape)
            shape = [(c, keep[c]) for c in by]
            for agg in aggs:
                if agg.fn in ("count", "countif"):
                    shape.append((agg.name, "long"))
                elif isinstance(agg.arg, A.Ident):
                    shape.append((agg.name, keep.get(agg.arg.name, "string")))
            json_cols = [c for c in json_cols if c in by]
        elif op_kind == "top":
            col = _pick(rng, shape, ORDERABLE)
            if col is not None:
                pipeline.append(A.Top(rng.randrange(1, 25), col, rng.random() < 0.7))
        else:
            pipeline.append(A.Take(rng.randrange(1, 25)))
    return A.Query(source=table_name, lets=tuple(lets), pipeline=tuple(pipeline))


def random_case(rng: random.Random, max_rows: int = 1000):
    """One differential test case: (query, dataset, oracle_tables)."""
    table, shape, json_cols = random_table(rng, max_rows=max_rows)
    query = random_query(rng, table.name, shape, json_cols)
    dataset = Dataset(tables={table.name: table})
    oracle_tables = {table.name: (list(table.columns), [list(r) for r in table.rows])}
    return query, dataset, oracle_tables
