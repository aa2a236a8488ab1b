"""Recursive-descent parser producing the pipeline AST.

Operators and functions that are real KQL but outside the supported subset
raise UnsupportedFeature rather than QuerySyntaxError, so downstream reports
can distinguish subset gaps from malformed input.
"""

from __future__ import annotations

from datetime import timedelta

from .ast import (
    AggCall, Binary, Call, Expr, Extend, Ident, Literal, Member, Operator,
    Project, Query, STRING_OPS, Summarize, Take, Top, Unary, Where,
)
from .errors import QuerySyntaxError, UnsupportedFeature
from .lexer import Token, tokenize

SUPPORTED_OPERATORS = {"where", "extend", "project", "summarize", "top", "take"}

# Real KQL tabular operators we recognize but do not support.
UNSUPPORTED_OPERATORS = {
    "join", "union", "lookup", "render", "evaluate", "invoke", "sample",
    "serialize", "sort", "order", "distinct", "count", "parse", "print",
    "search", "find", "fork", "facet", "range", "getschema", "externaldata",
    "datatable", "materialize", "mv", "as", "consume", "limit", "reduce",
    "scan", "partition", "make", "makeseries", "toscalar",
}

SUPPORTED_FUNCTIONS = {"ago", "now", "tostring", "todynamic", "tolower", "strlen"}
AGGREGATE_FUNCTIONS = {"count", "countif", "min", "max"}

# Infix words that are KQL operators outside the subset.
UNSUPPORTED_INFIX = {
    "in", "between", "matches", "like", "has_any", "has_all", "has_cs",
    "contains_cs", "startswith_cs", "endswith_cs", "hasprefix", "hassuffix",
    "startswith",  # only ! and plain contains/endswith/has variants listed below are in-subset
}
# startswith IS in the subset; remove it from the unsupported set.
UNSUPPORTED_INFIX.discard("startswith")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def check(self, kind: str, value: object = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def expect(self, kind: str, value: object = None, expected: str | None = None) -> Token:
        tok = self.peek()
        if not self.check(kind, value):
            what = expected or (repr(value) if value is not None else kind)
            raise QuerySyntaxError(
                f"unexpected {tok.kind} {tok.text!r}", tok.line, tok.column, expected=what
            )
        return self.advance()

    # -- grammar ------------------------------------------------------------

    def parse_query(self) -> Query:
        lets: list[tuple[str, Expr]] = []
        while self.check("keyword", "let"):
            self.advance()
            name = self.expect("ident", expected="binding name").value
            self.expect("punct", "=")
            expr = self.parse_expr()
            self.expect("punct", ";", expected="';' after let statement")
            lets.append((str(name), expr))

        source = self.expect("ident", expected="source table name").value
        pipeline: list[Operator] = []
        while self.check("punct", "|"):
            self.advance()
            pipeline.append(self.parse_operator())

        tok = self.peek()
        if tok.kind != "eof":
            raise QuerySyntaxError(
                f"trailing input {tok.text!r}", tok.line, tok.column, expected="'|' or end of query"
            )
        return Query(source=str(source), lets=tuple(lets), pipeline=tuple(pipeline))

    def parse_operator(self) -> Operator:
        tok = self.peek()
        if tok.kind != "ident":
            raise QuerySyntaxError(
                f"unexpected {tok.kind} {tok.text!r}", tok.line, tok.column,
                expected="a pipeline operator (where/extend/project/summarize/top/take)",
            )
        name = str(tok.value)
        if name not in SUPPORTED_OPERATORS:
            if name in UNSUPPORTED_OPERATORS:
                raise UnsupportedFeature(name, tok.line, tok.column)
            raise QuerySyntaxError(
                f"unknown operator {name!r}", tok.line, tok.column,
                expected="where/extend/project/summarize/top/take",
            )
        self.advance()
        if name == "where":
            return Where(self.parse_expr())
        if name == "extend":
            return Extend(tuple(self._parse_assignments()))
        if name == "project":
            return Project(tuple(self._parse_column_list()))
        if name == "summarize":
            return self._parse_summarize()
        if name == "top":
            return self._parse_top()
        return self._parse_take()

    def _parse_assignments(self) -> list[tuple[str, Expr]]:
        out = []
        while True:
            name = self.expect("ident", expected="column name").value
            self.expect("punct", "=", expected="'=' in extend assignment")
            out.append((str(name), self.parse_expr()))
            if self.check("punct", ","):
                self.advance()
                continue
            return out

    def _parse_column_list(self) -> list[str]:
        cols = [str(self.expect("ident", expected="column name").value)]
        while self.check("punct", ","):
            self.advance()
            cols.append(str(self.expect("ident", expected="column name").value))
        return cols

    def _parse_summarize(self) -> Summarize:
        aggs = [self._parse_aggregate()]
        while self.check("punct", ","):
            self.advance()
            aggs.append(self._parse_aggregate())
        by: tuple[str, ...] = ()
        if self.check("keyword", "by"):
            self.advance()
            by = tuple(self._parse_column_list())
        return Summarize(tuple(aggs), by)

    def _parse_aggregate(self) -> AggCall:
        tok = self.expect("ident", expected="aggregate")
        name = None
        fn = str(tok.value)
        if self.check("punct", "="):
            self.advance()
            name = fn
            fn = str(self.expect("ident", expected="aggregate function").value)
        if fn not in AGGREGATE_FUNCTIONS:
            raise UnsupportedFeature(f"aggregate {fn}", tok.line, tok.column)
        self.expect("punct", "(", expected="'('")
        arg: Expr | None = None
        if not self.check("punct", ")"):
            arg = self.parse_expr()
        close = self.expect("punct", ")", expected="')'")
        if name is None:
            name = self._default_agg_name(fn, arg, close)
        return AggCall(name=name, fn=fn, arg=arg)

    @staticmethod
    def _default_agg_name(fn: str, arg: Expr | None, tok: Token) -> str:
        if fn == "count":
            return "count_"
        if fn == "countif":
            return "countif_"
        if isinstance(arg, Ident):
            return f"{fn}_{arg.name}"
        raise QuerySyntaxError(
            f"{fn}() over an expression needs an explicit name", tok.line, tok.column,
            expected="Name = min(...)",
        )

    def _parse_top(self) -> Top:
        tok = self.expect("int", expected="positive row count")
        count = int(tok.value)
        if count <= 0:
            raise QuerySyntaxError("top count must be positive", tok.line, tok.column)
        self.expect("keyword", "by", expected="'by'")
        column = str(self.expect("ident", expected="sort column").value)
        descending = True
        if self.check("keyword", "asc"):
            self.advance()
            descending = False
        elif self.check("keyword", "desc"):
            self.advance()
        return Top(count=count, column=column, descending=descending)

    def _parse_take(self) -> Take:
        tok = self.expect("int", expected="positive row count")
        count = int(tok.value)
        if count <= 0:
            raise QuerySyntaxError("take count must be positive", tok.line, tok.column)
        return Take(count=count)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self._parse_or()

    def _parse_or(self) -> Expr:
        left = self._parse_and()
        while self.check("keyword", "or"):
            self.advance()
            left = Binary("or", left, self._parse_and())
        return left

    def _parse_and(self) -> Expr:
        left = self._parse_not()
        while self.check("keyword", "and"):
            self.advance()
            left = Binary("and", left, self._parse_not())
        return left

    def _parse_not(self) -> Expr:
        if self.check("keyword", "not"):
            self.advance()
            return Unary("not", self._parse_not())
        return self._parse_comparison()

    def _parse_comparison(self) -> Expr:
        left = self._parse_additive()
        tok = self.peek()
        if tok.kind == "punct" and tok.value in ("==", "!=", ">", ">=", "<", "<="):
            self.advance()
            return Binary(str(tok.value), left, self._parse_additive())
        if tok.kind == "negop":
            self.advance()
            return Binary(str(tok.value), left, self._parse_additive())
        if tok.kind == "ident" and tok.value in STRING_OPS:
            self.advance()
            return Binary(str(tok.value), left, self._parse_additive())
        if tok.kind in ("ident", "keyword") and tok.value in UNSUPPORTED_INFIX:
            raise UnsupportedFeature(str(tok.value), tok.line, tok.column)
        return left

    def _parse_additive(self) -> Expr:
        left = self._parse_multiplicative()
        while self.check("punct", "+") or self.check("punct", "-"):
            op = str(self.advance().value)
            left = Binary(op, left, self._parse_multiplicative())
        return left

    def _parse_multiplicative(self) -> Expr:
        left = self._parse_unary()
        while self.check("punct", "*") or self.check("punct", "/"):
            op = str(self.advance().value)
            left = Binary(op, left, self._parse_unary())
        return left

    def _parse_unary(self) -> Expr:
        if self.check("punct", "-"):
            self.advance()
            operand = self._parse_unary()
            # fold negative literals so -1 is a Literal, not a Unary node
            if isinstance(operand, Literal) and not isinstance(operand.value, bool) \
                    and isinstance(operand.value, (int, float, timedelta)):
                return Literal(-operand.value)
            return Unary("-", operand)
        return self._parse_postfix()

    def _parse_postfix(self) -> Expr:
        expr = self._parse_primary()
        while self.check("punct", "."):
            self.advance()
            name = self.expect("ident", expected="member name").value
            expr = Member(expr, str(name))
        return expr

    def _parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind in ("int", "real", "string", "timespan", "datetime"):
            self.advance()
            return Literal(tok.value)
        if tok.kind == "keyword" and tok.value in ("true", "false"):
            self.advance()
            return Literal(tok.value == "true")
        if tok.kind == "keyword" and tok.value == "null":
            self.advance()
            return Literal(None)
        if tok.kind == "ident":
            self.advance()
            name = str(tok.value)
            if self.check("punct", "("):
                if name not in SUPPORTED_FUNCTIONS:
                    raise UnsupportedFeature(f"function {name}", tok.line, tok.column)
                self.advance()
                args: list[Expr] = []
                if not self.check("punct", ")"):
                    args.append(self.parse_expr())
                    while self.check("punct", ","):
                        self.advance()
                        args.append(self.parse_expr())
                self.expect("punct", ")", expected="')'")
                return Call(name, tuple(args))
            return Ident(name)
        if tok.kind == "punct" and tok.value == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect("punct", ")", expected="')'")
            return expr
        raise QuerySyntaxError(
            f"unexpected {tok.kind} {tok.text!r}", tok.line, tok.column,
            expected="a literal, column, or function call",
        )


def parse(text: str) -> Query:
    """Parse query text into a Query AST."""
    return _Parser(tokenize(text)).parse_query()
