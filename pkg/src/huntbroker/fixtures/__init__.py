"""Shipped fixture documents and loaders for them.

Fixture dataset ids of the form `scenario:<id>:<seed>:<size>` resolve to the
deterministic synthetic generator, so no bulky table dumps are stored in the
repo.
"""

from __future__ import annotations

import json
from datetime import datetime
from importlib.resources import files

from ..catalog import Catalog, SchemaSnapshot, TemplateEntry, load_snapshot, template_from_json
from ..dataset import Dataset
from ..kql import execute
from ..synth import ANCHOR, generate_synthetic
from ..values import parse_timespan

_ROOT = files(__name__)


def fixture_text(name: str) -> str:
    return (_ROOT / name).read_text(encoding="utf-8")


def load_default_snapshot() -> SchemaSnapshot:
    return load_snapshot(json.loads(fixture_text("snapshot_default.json")))


def load_default_ti_store():
    from ..tintel import TIStore

    return TIStore.from_jsonl(fixture_text("ti_feed.jsonl"))


def load_default_policy():
    from ..broker import load_policy

    return load_policy(json.loads(fixture_text("policy_default.json")))


def load_default_sources(snapshot=None):
    from ..adapters import load_sources

    if snapshot is None:
        snapshot = load_default_snapshot()
    return load_sources(json.loads(fixture_text("sources_default.json")), snapshot)


def load_default_templates() -> list:
    entries = []
    for resource in sorted((_ROOT / "templates").iterdir(), key=lambda r: r.name):
        if resource.name.endswith(".json"):
            entries.append(template_from_json(json.loads(resource.read_text(encoding="utf-8"))))
    return entries


def default_catalog() -> Catalog:
    catalog = Catalog(load_default_snapshot())
    for entry in load_default_templates():
        catalog.register_template(entry)
    return catalog


def resolve_dataset(fixture_id: str):
    """Resolve a dataset fixture id to (Dataset, now)."""
    if fixture_id.startswith("scenario:"):
        _, scenario_id, seed, size = fixture_id.split(":")
        dataset, _ = generate_synthetic(int(seed), scenario_id, int(size))
        return dataset, ANCHOR
    raise ValueError(f"unknown dataset fixture id {fixture_id!r}")


def combined_dataset(seed: int = 42):
    """One dataset covering all five tables, for serving every source.

    DeviceEvents carries the scheduled-task scenario, DeviceNetworkEvents the
    beacon scenario, and the benign scenario fills the remaining tables.
    Returns (Dataset, GroundTruth merged across scenarios, as_of).
    """
    from ..synth import GroundTruth

    sched, sched_truth = generate_synthetic(seed, "scheduled-task-persistence", 505)
    beacon, beacon_truth = generate_synthetic(seed, "ti-domain-beacon", 505)
    noise, noise_truth = generate_synthetic(seed, "benign-admin-noise", 95)
    tables = dict(sched.tables)
    tables["DeviceNetworkEvents"] = beacon.tables["DeviceNetworkEvents"]
    for name in ("SigninLogs", "DeviceProcessEvents", "EmailEvents"):
        tables[name] = noise.tables[name]
    truth = GroundTruth()
    truth.labels.update(sched_truth.labels)
    truth.labels.update(beacon_truth.labels)
    for rid, doc in noise_truth.labels.items():
        truth.labels.setdefault(rid, doc)
    return Dataset(tables=tables), truth, ANCHOR


def coerce_params(entry: TemplateEntry, raw: dict) -> dict:
    out = {}
    for name, value in raw.items():
        spec = entry.param(name)
        if spec is None:
            out[name] = value
        elif spec.type == "timespan" and isinstance(value, str):
            out[name] = parse_timespan(value)
        elif spec.type == "datetime" and isinstance(value, str):
            from ..values import parse_datetime

            out[name] = parse_datetime(value)
        else:
            out[name] = value
    return out


def run_template_tests(catalog: Catalog, entry: TemplateEntry) -> list:
    """Execute a template's pinned tests; returns a list of failure strings."""
    failures = []
    for test in entry.tests:
        dataset, now = resolve_dataset(test["dataset"])
        bound = catalog.bind(entry.id, coerce_params(entry, test.get("params", {})))
        result = execute(bound.ast, dataset, now)
        if len(result.rows) != test["expected_rows"]:
            failures.append(
                f"{entry.id}: dataset {test['dataset']} returned "
                f"{len(result.rows)} rows, expected {test['expected_rows']}"
            )
    return failures
