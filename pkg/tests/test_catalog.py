import json
import math
import re
from datetime import timedelta

import pytest

from huntbroker.catalog import (
    BodyInvalid,
    Catalog,
    ConstraintViolation,
    DuplicateId,
    MissingOwner,
    ParamSpec,
    PlaceholderMismatch,
    SchemaFormatError,
    TemplateEntry,
    TemplateFormatError,
    TemplateNotApproved,
    UnknownParam,
    UnknownTemplate,
    load_snapshot,
    template_checksum,
    template_from_json,
    template_to_json,
)
from huntbroker.fixtures import (
    default_catalog,
    fixture_text,
    load_default_snapshot,
    load_default_templates,
    run_template_tests,
)
from huntbroker.kql import parse

from .conftest import SCHED_TASK_HUNT


@pytest.fixture(scope="module")
def snapshot():
    return load_default_snapshot()


@pytest.fixture(scope="module")
def catalog():
    return default_catalog()


def make_entry(**overrides) -> TemplateEntry:
    doc = {
        "id": "unit-test-template",
        "owner": "test-team",
        "version": "1.0.0",
        "review_status": "draft",
        "description": "unit test body",
        "tactic_tags": ["persistence"],
        "body": (
            "DeviceEvents\n"
            "| where Timestamp > ago({{lookback}})\n"
            "| take {{row_cap}}"
        ),
        "params": [
            {"name": "lookback", "type": "timespan", "constraint": {"max": "30d"}},
            {"name": "row_cap", "type": "long", "constraint": {"max": 1000}},
        ],
        "expected_output_columns": [],
        "tests": [],
        "schema_version": "2025.06.1",
    }
    doc.update(overrides)
    return template_from_json(doc)


# ---------------------------------------------------------------------------
# Snapshot loading
# ---------------------------------------------------------------------------

def test_default_snapshot_shape(snapshot):
    assert snapshot.version == "2025.06.1"
    assert set(snapshot.tables) == {
        "DeviceEvents", "DeviceNetworkEvents", "DeviceProcessEvents",
        "SigninLogs", "EmailEvents",
    }
    de = snapshot.tables["DeviceEvents"]
    assert de.time_column == "Timestamp"
    assert de.column("AdditionalFields").sensitivity == "sensitive"
    assert "graph_hunting" in de.source_ids


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("version"),
        lambda d: d["tables"]["T"].pop("time_column"),
        lambda d: d["tables"]["T"]["columns"].append({"name": "Ts", "type": "datetime"}),
        lambda d: d["tables"]["T"]["columns"][0].update(type="widget"),
        lambda d: d["tables"]["T"]["columns"][0].update(sensitivity="secretish"),
        lambda d: d["tables"]["T"].update(time_column="Name"),
    ],
)
def test_snapshot_format_errors(mutate):
    doc = {
        "version": "1",
        "tables": {
            "T": {
                "time_column": "Ts",
                "source_ids": ["graph_hunting"],
                "columns": [
                    {"name": "Ts", "type": "datetime"},
                    {"name": "Name", "type": "string"},
                ],
            }
        },
    }
    mutate(doc)
    with pytest.raises(SchemaFormatError):
        load_snapshot(doc)


# ---------------------------------------------------------------------------
# Registration
# ---------------------------------------------------------------------------

def test_register_and_get(snapshot):
    cat = Catalog(snapshot)
    entry = make_entry()
    assert cat.register_template(entry) == entry.id
    assert cat.get(entry.id) is entry
    with pytest.raises(UnknownTemplate):
        cat.get("nope")


def test_register_duplicate_id(snapshot):
    cat = Catalog(snapshot)
    cat.register_template(make_entry())
    with pytest.raises(DuplicateId):
        cat.register_template(make_entry())


def test_register_requires_owner(snapshot):
    with pytest.raises(MissingOwner):
        Catalog(snapshot).register_template(make_entry(owner=""))


@pytest.mark.parametrize("bad", ["1.0", "v1.0.0", "", "1.0.0-beta"])
def test_register_rejects_bad_version(snapshot, bad):
    with pytest.raises(TemplateFormatError):
        Catalog(snapshot).register_template(make_entry(version=bad))


def test_register_rejects_bad_status(snapshot):
    with pytest.raises(TemplateFormatError):
        Catalog(snapshot).register_template(make_entry(review_status="shipped"))


def test_placeholder_mismatch_both_directions(snapshot):
    # declared but not in body
    entry = make_entry(
        params=[
            {"name": "lookback", "type": "timespan"},
            {"name": "row_cap", "type": "long"},
            {"name": "ghost", "type": "string"},
        ]
    )
    with pytest.raises(PlaceholderMismatch):
        Catalog(snapshot).register_template(entry)
    # in body but not declared
    entry = make_entry(params=[{"name": "lookback", "type": "timespan"}])
    with pytest.raises(PlaceholderMismatch):
        Catalog(snapshot).register_template(entry)


def test_body_must_parse_with_dummy_params(snapshot):
    entry = make_entry(body="DeviceEvents | where | take {{row_cap}} {{lookback}}")
    with pytest.raises(BodyInvalid):
        Catalog(snapshot).register_template(entry)


def test_body_with_unknown_column_is_rejected(snapshot):
    entry = make_entry(
        body=(
            "DeviceEvents\n"
            "| where Timestamp > ago({{lookback}})\n"
            "| project TaskNam\n"
            "| take {{row_cap}}"
        )
    )
    with pytest.raises(BodyInvalid) as err:
        Catalog(snapshot).register_template(entry)
    assert "TaskNam" in str(err.value)
    assert err.value.report is not None
    assert "TaskNam" in err.value.report.unknown_columns


def test_approved_requires_tests_and_bounds(snapshot):
    entry = make_entry(review_status="approved", tests=[])
    with pytest.raises(TemplateFormatError):
        Catalog(snapshot).register_template(entry)

    unbounded = make_entry(
        review_status="approved",
        body="DeviceEvents | where Timestamp > ago({{lookback}})",
        params=[{"name": "lookback", "type": "timespan"}],
        tests=[{"dataset": "scenario:benign-admin-noise:1:60", "expected_rows": 0}],
    )
    with pytest.raises(BodyInvalid):
        Catalog(snapshot).register_template(unbounded)

    no_time = make_entry(
        review_status="approved",
        body="DeviceEvents | take {{row_cap}} // {{lookback}}",
        tests=[{"dataset": "scenario:benign-admin-noise:1:60", "expected_rows": 0}],
    )
    with pytest.raises((BodyInvalid, PlaceholderMismatch)):
        Catalog(snapshot).register_template(no_time)


def test_draft_without_tests_registers(snapshot):
    cat = Catalog(snapshot)
    cat.register_template(make_entry(review_status="draft", tests=[]))


# ---------------------------------------------------------------------------
# Binding
# ---------------------------------------------------------------------------

def test_bind_reproduces_hunt_text(catalog):
    bound = catalog.bind(
        "sched-task-persistence",
        {"lookback": timedelta(days=7), "row_cap": 100},
    )
    assert parse(bound.text) == parse(SCHED_TASK_HUNT)


def test_bind_unknown_template(catalog):
    with pytest.raises(UnknownTemplate):
        catalog.bind("no-such-template", {})


def test_bind_rejects_draft(snapshot):
    cat = Catalog(snapshot)
    cat.register_template(make_entry(review_status="draft"))
    with pytest.raises(TemplateNotApproved):
        cat.bind("unit-test-template", {"lookback": timedelta(days=1), "row_cap": 5})


def test_bind_param_set_must_match(catalog):
    with pytest.raises(UnknownParam):
        catalog.bind("sched-task-persistence", {"lookback": timedelta(days=7)})
    with pytest.raises(UnknownParam):
        catalog.bind(
            "sched-task-persistence",
            {"lookback": timedelta(days=7), "row_cap": 100, "bonus": 1},
        )


def test_bind_enforces_timespan_max(catalog):
    with pytest.raises(ConstraintViolation) as err:
        catalog.bind(
            "sched-task-persistence",
            {"lookback": timedelta(days=90), "row_cap": 100},
        )
    assert err.value.name == "lookback"
    assert err.value.limit == "30d"


def test_bind_enforces_long_max(catalog):
    with pytest.raises(ConstraintViolation):
        catalog.bind(
            "sched-task-persistence",
            {"lookback": timedelta(days=7), "row_cap": 100_000},
        )


def test_bind_enforces_regex(catalog):
    ok = catalog.bind(
        "process-spawn-chain",
        {"lookback": timedelta(days=14), "parent": "services.exe", "row_cap": 50},
    )
    assert '"services.exe"' in ok.text
    with pytest.raises(ConstraintViolation):
        catalog.bind(
            "process-spawn-chain",
            {"lookback": timedelta(days=14), "parent": "cmd", "row_cap": 50},
        )


def test_bind_type_errors(catalog):
    from huntbroker.catalog import ParamTypeError

    with pytest.raises(ParamTypeError):
        catalog.bind("sched-task-persistence", {"lookback": "7d", "row_cap": 100})
    with pytest.raises(ParamTypeError):
        catalog.bind(
            "sched-task-persistence", {"lookback": timedelta(days=7), "row_cap": True}
        )


def test_bound_params_cannot_add_stages(catalog):
    """A hostile string value stays a literal: stage count never grows."""
    baseline = catalog.bind(
        "account-signin-activity",
        {"lookback": timedelta(days=7), "account": "alice@corp.example", "row_cap": 10},
    )
    hostile = catalog.bind(
        "account-signin-activity",
        {"lookback": timedelta(days=7), "account": 'abc" | project *', "row_cap": 10},
    )
    assert len(hostile.ast.pipeline) == len(baseline.ast.pipeline)
    assert hostile.ast.source == baseline.ast.source
    # the payload survives only as an inert string literal
    assert 'abc\\" | project *' in hostile.text


# ---------------------------------------------------------------------------
# Retrieval (independent tf-idf reference)
# ---------------------------------------------------------------------------

_REF_TOKEN = re.compile(r"[a-z0-9]+")

_TEMPLATE_FILES = [
    "templates/account-signin-activity.json",
    "templates/broad-signin-sweep.json",
    "templates/email-phish-triage.json",
    "templates/process-spawn-chain.json",
    "templates/sched-task-persistence.json",
    "templates/ti-domain-beacon.json",
]


def _ref_source_table(body: str) -> str:
    for line in body.splitlines():
        line = line.strip()
        if not line or line.startswith("let "):
            continue
        return line.split()[0].split("|")[0]
    raise AssertionError("no source line in body")


def _ref_docs() -> dict:
    docs = {}
    for name in _TEMPLATE_FILES:
        doc = json.loads(fixture_text(name))
        text = " ".join(
            [doc["description"], " ".join(doc["tactic_tags"]), _ref_source_table(doc["body"])]
        )
        docs[doc["id"]] = _REF_TOKEN.findall(text.lower())
    return docs


def _ref_retrieve(terms, k):
    docs = _ref_docs()
    n = len(docs)
    df = {}
    for toks in docs.values():
        for t in set(toks):
            df[t] = df.get(t, 0) + 1

    def idf(t):
        return math.log((1 + n) / (1 + df.get(t, 0))) + 1.0

    def vec(tokens):
        tf = {}
        for t in tokens:
            tf[t] = tf.get(t, 0) + 1
        return {t: c * idf(t) for t, c in tf.items()}

    q = vec([t for term in terms for t in _REF_TOKEN.findall(str(term).lower())])
    qn = math.sqrt(sum(w * w for w in q.values()))
    if qn == 0:
        return []
    scored = []
    for tid in sorted(docs):
        d = vec(docs[tid])
        dn = math.sqrt(sum(w * w for w in d.values()))
        dot = sum(w * q.get(t, 0.0) for t, w in d.items())
        if dn and dot > 0:
            scored.append((tid, dot / (dn * qn)))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def test_retrieve_matches_reference_ranking(catalog):
    for terms in (
        ["scheduled", "task", "persistence"],
        ["beacon", "domain"],
        ["signin", "account"],
        ["phishing", "email", "url"],
        ["DeviceEvents"],
        ["process", "chain", "spawn", "services"],
    ):
        want = _ref_retrieve(terms, 4)
        got = catalog.retrieve(terms, 4)
        assert [h.template_id for h in got] == [tid for tid, _ in want], terms
        for hit, (_, score) in zip(got, want):
            assert abs(hit.score - score) < 1e-12


def test_retrieve_scheduled_task_first(catalog):
    hits = catalog.retrieve(["scheduled", "task", "persistence"], 3)
    assert hits
    assert hits[0].template_id == "sched-task-persistence"
    assert hits[0].score > 0
    assert "scheduled" in hits[0].matched_terms or "task" in hits[0].matched_terms


def test_retrieve_edge_cases(catalog):
    assert catalog.retrieve(["scheduled"], 0) == []
    assert catalog.retrieve([], 5) == []
    assert catalog.retrieve(["zzzzunheardof"], 5) == []


# ---------------------------------------------------------------------------
# Shipped fixtures
# ---------------------------------------------------------------------------

def test_default_templates_all_load_and_pass_their_tests(catalog):
    entries = load_default_templates()
    assert len(entries) == 6
    for entry in catalog.list_templates():
        failures = run_template_tests(catalog, entry)
        assert failures == [], failures


def test_template_checksum_round_trip():
    entry = make_entry()
    doc = template_to_json(entry)
    again = template_from_json(doc)
    assert template_checksum(again) == template_checksum(entry)
    assert again == entry
