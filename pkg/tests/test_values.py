from datetime import datetime, timedelta, timezone

import pytest

from huntbroker.values import (
    canonical_json,
    digest_json,
    format_datetime,
    format_timespan,
    parse_datetime,
    parse_timespan,
    sha256_hex,
    value_from_json,
    value_to_json,
)

UTC = timezone.utc


@pytest.mark.parametrize(
    "text,expected",
    [
        ("7d", timedelta(days=7)),
        ("36h", timedelta(hours=36)),
        ("90m", timedelta(minutes=90)),
        ("45s", timedelta(seconds=45)),
        ("0d", timedelta()),
    ],
)
def test_parse_timespan(text, expected):
    assert parse_timespan(text) == expected


@pytest.mark.parametrize("bad", ["7", "d", "7w", "-3d", "7.5h", ""])
def test_parse_timespan_rejects(bad):
    with pytest.raises(ValueError):
        parse_timespan(bad)


@pytest.mark.parametrize(
    "span,expected",
    [
        (timedelta(days=7), "7d"),
        (timedelta(hours=48), "2d"),
        (timedelta(hours=36), "36h"),
        (timedelta(minutes=90), "90m"),
        (timedelta(seconds=61), "61s"),
        (timedelta(seconds=90, microseconds=500), "90s"),  # floor to seconds
        (timedelta(), "0d"),
        (timedelta(days=-2), "-2d"),
    ],
)
def test_format_timespan_prefers_largest_exact_unit(span, expected):
    assert format_timespan(span) == expected


def test_format_timespan_round_trips_parseable_values():
    for text in ["7d", "36h", "90m", "45s", "1d"]:
        assert format_timespan(parse_timespan(text)) == text or parse_timespan(
            format_timespan(parse_timespan(text))
        ) == parse_timespan(text)


def test_parse_datetime_and_format():
    dt = parse_datetime("2025-06-01T12:30:00Z")
    assert dt == datetime(2025, 6, 1, 12, 30, tzinfo=UTC)
    assert format_datetime(dt) == "2025-06-01T12:30:00.000000Z"
    frac = parse_datetime("2025-06-01T12:30:00.250000Z")
    assert frac.microsecond == 250000
    assert format_datetime(frac) == "2025-06-01T12:30:00.250000Z"


def test_canonical_json_is_key_sorted_and_compact():
    blob = canonical_json({"b": 1, "a": [1, 2], "c": "x"})
    assert blob == '{"a":[1,2],"b":1,"c":"x"}'
    assert digest_json({"b": 1, "a": [1, 2], "c": "x"}) == sha256_hex(blob.encode("utf-8"))


def test_value_json_round_trip():
    values = [
        None,
        True,
        42,
        3.5,
        "text",
        datetime(2025, 6, 1, 12, tzinfo=UTC),
        timedelta(days=3, seconds=7),
        {"k": [1, "two", None]},
    ]
    for v in values:
        assert value_from_json(value_to_json(v)) == v


def test_datetime_and_timespan_tags_are_distinct():
    dt_json = value_to_json(datetime(2025, 6, 1, tzinfo=UTC))
    ts_json = value_to_json(timedelta(days=1))
    assert isinstance(dt_json, dict) and isinstance(ts_json, dict)
    assert set(dt_json) != set(ts_json)
