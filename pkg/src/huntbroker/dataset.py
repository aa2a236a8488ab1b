"""In-memory datasets and their JSON fixture format.

A dataset is a map of named tables; each table is a column list plus row
arrays. Values round-trip through the tagged JSON encoding in values.py so
datetimes and timespans survive serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .values import canonical_json, sha256_hex, value_from_json, value_to_json


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[tuple]

    def column_index(self, name: str) -> int:
        return self.columns.index(name)

    def to_json(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [[value_to_json(v) for v in row] for row in self.rows],
        }

    @classmethod
    def from_json(cls, name: str, doc: dict) -> "Table":
        columns = list(doc["columns"])
        rows = []
        for raw in doc["rows"]:
            if len(raw) != len(columns):
                raise ValueError(f"table {name}: row arity {len(raw)} != {len(columns)}")
            rows.append(tuple(value_from_json(v) for v in raw))
        return cls(name=name, columns=columns, rows=rows)


@dataclass
class Dataset:
    tables: dict[str, Table] = field(default_factory=dict)

    def table(self, name: str) -> Table | None:
        return self.tables.get(name)

    def to_json(self) -> dict:
        return {"tables": {name: t.to_json() for name, t in sorted(self.tables.items())}}

    @classmethod
    def from_json(cls, doc: dict) -> "Dataset":
        tables = {
            name: Table.from_json(name, tdoc)
            for name, tdoc in doc.get("tables", {}).items()
        }
        return cls(tables=tables)

    def dumps(self) -> str:
        return canonical_json(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Dataset":
        return cls.from_json(json.loads(text))

    def content_hash(self) -> str:
        """Stable digest used by read-only invariant checks."""
        return sha256_hex(self.dumps().encode("utf-8"))
