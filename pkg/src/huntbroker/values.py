"""Scalar value conventions shared across the package.

Query values map onto plain Python objects: Null=None, Bool=bool, Long=int,
Real=float, Str=str, DateTime=tz-aware datetime (always UTC, microsecond
precision), Timespan=timedelta, Dynamic=dict/list trees parsed from JSON.
"""

from __future__ import annotations

import hashlib
import json
import re
from datetime import datetime, timedelta, timezone

TIMESPAN_UNITS = {
    "d": 86_400_000_000,
    "h": 3_600_000_000,
    "m": 60_000_000,
    "s": 1_000_000,
}

_TIMESPAN_RE = re.compile(r"^(\d+)([dhms])$")
_DATETIME_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?Z$"
)

VALUE_TYPES = {"null", "bool", "long", "real", "string", "datetime", "timespan", "dynamic"}


def parse_timespan(text: str) -> timedelta:
    """Parse a timespan literal of the form <int>[d|h|m|s]."""
    m = _TIMESPAN_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a timespan literal: {text!r}")
    return timedelta(microseconds=int(m.group(1)) * TIMESPAN_UNITS[m.group(2)])


def format_timespan(span: timedelta) -> str:
    """Render a timespan in the largest literal unit that divides it exactly."""
    us = timespan_us(span)
    sign = "-" if us < 0 else ""
    mag = abs(us)
    for unit in ("d", "h", "m", "s"):
        size = TIMESPAN_UNITS[unit]
        if mag % size == 0:
            return f"{sign}{mag // size}{unit}"
    # sub-second spans cannot come from literals; fall back to floor seconds
    return f"{sign}{mag // TIMESPAN_UNITS['s']}s"


def timespan_us(span: timedelta) -> int:
    return (span.days * 86_400 + span.seconds) * 1_000_000 + span.microseconds


def parse_datetime(text: str) -> datetime:
    """Parse a datetime(...) literal body: YYYY-MM-DDTHH:MM:SS[.ffffff]Z."""
    m = _DATETIME_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a datetime literal: {text!r}")
    frac = (m.group(7) or "").ljust(6, "0")
    return datetime(
        int(m.group(1)), int(m.group(2)), int(m.group(3)),
        int(m.group(4)), int(m.group(5)), int(m.group(6)),
        int(frac), tzinfo=timezone.utc,
    )


def format_datetime(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def canonical_json(obj) -> str:
    """Canonical form used for digests and checksums: sorted keys, no whitespace, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_json(obj) -> str:
    return sha256_hex(canonical_json(obj).encode("utf-8"))


def value_to_json(value):
    """Encode a query value for the JSON wire/fixture formats."""
    if isinstance(value, datetime):
        return {"$dt": format_datetime(value)}
    if isinstance(value, timedelta):
        return {"$ts": timespan_us(value)}
    if isinstance(value, dict):
        return {k: value_to_json(v) for k, v in value.items()}
    if isinstance(value, list):
        return [value_to_json(v) for v in value]
    return value


def value_from_json(obj):
    if isinstance(obj, dict):
        if set(obj.keys()) == {"$dt"}:
            return parse_datetime(obj["$dt"])
        if set(obj.keys()) == {"$ts"}:
            return timedelta(microseconds=obj["$ts"])
        return {k: value_from_json(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [value_from_json(v) for v in obj]
    return obj


def value_type_name(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "long"
    if isinstance(value, float):
        return "real"
    if isinstance(value, str):
        return "string"
    if isinstance(value, datetime):
        return "datetime"
    if isinstance(value, timedelta):
        return "timespan"
    if isinstance(value, (dict, list)):
        return "dynamic"
    raise TypeError(f"unsupported value type: {type(value)!r}")
