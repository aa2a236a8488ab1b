"""Pre-execution cost estimates in scan units (rows scanned).

Stats keep a day-granularity histogram per table. A day bucket [d, d+1) is
charged when its exclusive end falls inside the lookback window, so a 7d
lookback over daily buckets charges exactly the 7 newest buckets when as_of
sits on the boundary after the newest one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone

from ..dataset import Dataset
from .analyzer import StaticReport
from .ast import Query
from .errors import UnknownTable


@dataclass
class TableStats:
    row_count: int
    histogram: dict[str, int] = field(default_factory=dict)  # ISO date -> rows


@dataclass
class DatasetStats:
    as_of: datetime
    tables: dict[str, TableStats] = field(default_factory=dict)

    def to_json(self) -> dict:
        from ..values import format_datetime

        return {
            "as_of": format_datetime(self.as_of),
            "tables": {
                name: {"row_count": t.row_count, "histogram": dict(sorted(t.histogram.items()))}
                for name, t in sorted(self.tables.items())
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DatasetStats":
        from ..values import parse_datetime

        tables = {
            name: TableStats(row_count=t["row_count"], histogram=dict(t.get("histogram", {})))
            for name, t in doc.get("tables", {}).items()
        }
        return cls(as_of=parse_datetime(doc["as_of"]), tables=tables)


def collect_stats(dataset: Dataset, snapshot, as_of: datetime | None = None) -> DatasetStats:
    """Histogram each table over its snapshot time column.

    When as_of is omitted it is set to the boundary after the newest bucket
    across all tables, making "last N days" windows bucket-exact.
    """
    tables: dict[str, TableStats] = {}
    newest: date | None = None
    for name, table in dataset.tables.items():
        schema = getattr(snapshot, "tables", {}).get(name)
        hist: dict[str, int] = {}
        if schema is not None and schema.time_column in table.columns:
            idx = table.column_index(schema.time_column)
            for row in table.rows:
                ts = row[idx]
                if isinstance(ts, datetime):
                    day = ts.date()
                    hist[day.isoformat()] = hist.get(day.isoformat(), 0) + 1
                    if newest is None or day > newest:
                        newest = day
        tables[name] = TableStats(row_count=len(table.rows), histogram=hist)
    if as_of is None:
        base = newest if newest is not None else date(1970, 1, 1)
        as_of = datetime(base.year, base.month, base.day, tzinfo=timezone.utc) + timedelta(days=1)
    return DatasetStats(as_of=as_of, tables=tables)


def estimate_cost(query: Query, stats: DatasetStats, report: StaticReport) -> int:
    """Estimated rows scanned; the lookback window prunes day buckets."""
    table = stats.tables.get(query.source)
    if table is None:
        raise UnknownTable(query.source)
    if report.lookback is None:
        return table.row_count
    window_start = stats.as_of - report.lookback
    total = 0
    for day_iso, count in table.histogram.items():
        d = date.fromisoformat(day_iso)
        bucket_end = datetime(d.year, d.month, d.day, tzinfo=timezone.utc) + timedelta(days=1)
        if bucket_end > window_start:
            total += count
    return total
