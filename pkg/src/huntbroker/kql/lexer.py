"""Tokenizer for the query subset.

Timespan literals (7d, 12h, 30m, 45s) are lexed as single tokens. The body of
a datetime(...) literal is scanned raw because it contains '-' and ':' which
are not otherwise legal token characters.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..values import parse_datetime, parse_timespan
from .errors import QuerySyntaxError, UnsupportedFeature

KEYWORDS = {"let", "by", "asc", "desc", "and", "or", "not", "true", "false", "null"}

# Multi-char punctuation first so == beats =.
_PUNCT = ["==", "!=", ">=", "<=", "|", "(", ")", "=", ">", "<", "+", "-", "*", "/", ".", ",", ";"]

# Named string predicates usable after a '!' prefix.
NEGATABLE = {"contains", "endswith"}
# '!'-forms that are real KQL but outside the subset; recognized for better errors.
NEG_UNSUPPORTED = {"startswith", "has", "in", "has_any", "hasprefix", "hassuffix"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | int | real | string | timespan | datetime | punct | negop | eof
    value: object
    text: str
    line: int
    column: int


class _Scanner:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1

    def eof(self) -> bool:
        return self.pos >= len(self.src)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.src[i] if i < len(self.src) else ""

    def advance(self) -> str:
        ch = self.src[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def error(self, message: str, expected: str | None = None) -> QuerySyntaxError:
        return QuerySyntaxError(message, self.line, self.col, expected)


def tokenize(source: str) -> list[Token]:
    s = _Scanner(source)
    tokens: list[Token] = []

    while not s.eof():
        ch = s.peek()
        if ch in " \t\r\n":
            s.advance()
            continue
        if ch == "/" and s.peek(1) == "/":  # line comment
            while not s.eof() and s.peek() != "\n":
                s.advance()
            continue

        line, col = s.line, s.col

        if ch == "=" and s.peek(1) == "~":
            raise UnsupportedFeature("=~", line, col)
        if ch == "!":
            nxt = s.peek(1)
            if nxt == "=":
                s.advance(); s.advance()
                tokens.append(Token("punct", "!=", "!=", line, col))
                continue
            if nxt.isalpha():
                s.advance()
                name = _scan_ident(s)
                if name in NEGATABLE:
                    tokens.append(Token("negop", "!" + name, "!" + name, line, col))
                    continue
                if name in NEG_UNSUPPORTED:
                    raise UnsupportedFeature("!" + name, line, col)
                raise QuerySyntaxError(f"unknown operator !{name}", line, col)
            raise s.error("unexpected '!'", expected="'=' or a string operator name")

        if ch == '"':
            tokens.append(Token("string", _scan_string(s), "", line, col))
            continue

        if ch.isdigit():
            tokens.append(_scan_number(s, line, col))
            continue

        if ch.isalpha() or ch == "_":
            name = _scan_ident(s)
            if name == "datetime" and s.peek() == "(":
                tokens.append(_scan_datetime(s, line, col))
                continue
            kind = "keyword" if name in KEYWORDS else "ident"
            tokens.append(Token(kind, name, name, line, col))
            continue

        for punct in _PUNCT:
            if s.src.startswith(punct, s.pos):
                for _ in punct:
                    s.advance()
                tokens.append(Token("punct", punct, punct, line, col))
                break
        else:
            raise s.error(f"unexpected character {ch!r}")

    tokens.append(Token("eof", None, "", s.line, s.col))
    return tokens


def _scan_ident(s: _Scanner) -> str:
    out = []
    while not s.eof() and (s.peek().isalnum() or s.peek() == "_"):
        out.append(s.advance())
    return "".join(out)


def _scan_string(s: _Scanner) -> str:
    line, col = s.line, s.col
    s.advance()  # opening quote
    out = []
    while True:
        if s.eof():
            raise QuerySyntaxError("unterminated string literal", line, col, expected='"')
        ch = s.advance()
        if ch == '"':
            return "".join(out)
        if ch == "\\":
            if s.eof():
                raise QuerySyntaxError("unterminated escape", s.line, s.col)
            esc = s.advance()
            if esc == "n":
                out.append("\n")
            elif esc == "r":
                out.append("\r")
            elif esc == "t":
                out.append("\t")
            elif esc == "u":
                hexits = "".join(s.advance() for _ in range(4) if not s.eof())
                try:
                    out.append(chr(int(hexits, 16)))
                except ValueError:
                    raise QuerySyntaxError(f"bad unicode escape \\u{hexits}", s.line, s.col)
            elif esc in ('"', "\\", "'"):
                out.append(esc)
            else:
                raise QuerySyntaxError(f"unknown escape \\{esc}", s.line, s.col)
        else:
            out.append(ch)


def _scan_number(s: _Scanner, line: int, col: int) -> Token:
    digits = []
    while not s.eof() and s.peek().isdigit():
        digits.append(s.advance())
    nxt = s.peek()
    if nxt != "" and nxt in "dhms" and not (s.peek(1).isalnum() or s.peek(1) == "_"):
        unit = s.advance()
        text = "".join(digits) + unit
        return Token("timespan", parse_timespan(text), text, line, col)
    if nxt == "." and s.peek(1).isdigit():
        digits.append(s.advance())
        while not s.eof() and s.peek().isdigit():
            digits.append(s.advance())
        if s.peek() != "" and s.peek() in "eE":
            digits.append(s.advance())
            if s.peek() != "" and s.peek() in "+-":
                digits.append(s.advance())
            while not s.eof() and s.peek().isdigit():
                digits.append(s.advance())
        text = "".join(digits)
        return Token("real", float(text), text, line, col)
    text = "".join(digits)
    return Token("int", int(text), text, line, col)


def _scan_datetime(s: _Scanner, line: int, col: int) -> Token:
    s.advance()  # "("
    raw = []
    while True:
        if s.eof():
            raise QuerySyntaxError("unterminated datetime literal", line, col, expected=")")
        ch = s.advance()
        if ch == ")":
            break
        raw.append(ch)
    body = "".join(raw).strip()
    try:
        value = parse_datetime(body)
    except ValueError:
        raise QuerySyntaxError(
            f"bad datetime literal {body!r}", line, col,
            expected="datetime(YYYY-MM-DDTHH:MM:SS[.ffffff]Z)",
        )
    return Token("datetime", value, body, line, col)
