"""Bounded KQL subset: lexer, parser, static analyzer, cost model, interpreter."""

from .analyzer import StaticReport, analyze
from .ast import (
    AggCall, Binary, Call, Expr, Extend, Ident, Literal, Member, Operator,
    Project, Query, Summarize, Take, Top, Unary, Where, quote_string, unparse,
    unparse_expr,
)
from .cost import DatasetStats, TableStats, collect_stats, estimate_cost
from .errors import (
    KqlError, QuerySyntaxError, TypeMismatch, UnknownTable, UnsupportedFeature,
)
from .interpreter import ResultTable, execute
from .parser import parse

__all__ = [
    "AggCall", "Binary", "Call", "DatasetStats", "Expr", "Extend", "Ident",
    "KqlError", "Literal", "Member", "Operator", "Project", "Query",
    "QuerySyntaxError", "ResultTable", "StaticReport", "Summarize",
    "TableStats", "Take", "Top", "TypeMismatch", "Unary", "UnknownTable",
    "UnsupportedFeature", "Where", "analyze", "collect_stats", "estimate_cost",
    "execute", "parse", "quote_string", "unparse", "unparse_expr",
]
