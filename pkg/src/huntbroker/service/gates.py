"""Release gate runner for template/policy/snapshot repositories.

Five gates, all of which must pass for a zero exit: static validation,
secret scanning, policy linting against the last released policy, offline
benchmark thresholds plus regression against a stored baseline, and release
packaging (checksummed manifest, changelog, rollback doc).
"""

import json
import os
import re
from dataclasses import dataclass

from ..broker import PolicyFormatError, check_policy_document, load_policy
from ..catalog import Catalog, CatalogError, load_snapshot, template_from_json
from ..evalkit import SuiteTooSmall, SystemUnderTest, build_default_suite, run_offline_benchmark
from ..fixtures import load_default_ti_store
from ..values import sha256_hex

GATES = (
    "static_validation",
    "security_scanning",
    "policy_testing",
    "benchmark_testing",
    "release_packaging",
)

SECRET_PATTERNS = (
    ("aws_access_key", re.compile(r"AKIA[0-9A-Z]{16}")),
    ("private_key", re.compile(r"-----BEGIN [A-Z ]*PRIVATE KEY-----")),
    ("api_key_assignment", re.compile(r"(?i)api[_-]?key\s*[:=]\s*\S{8,}")),
    ("password_assignment", re.compile(r"(?i)password\s*=\s*\S+")),
    ("jwt_token", re.compile(r"eyJ[A-Za-z0-9_-]{10,}\.[A-Za-z0-9_-]{10,}")),
)

MANIFEST_DIRS = ("templates", "policy", "snapshots")
MANIFEST_EXTRA = ("benchmark_baseline.json",)

# benchmark thresholds enforced by the benchmark_testing gate
MIN_SCHEMA_VALID = 0.95
_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GateFinding:
    gate: str
    code: str
    detail: str

    def to_json(self) -> dict:
        return {"gate": self.gate, "code": self.code, "detail": self.detail}


def _code_of(exc: Exception) -> str:
    name = type(exc).__name__
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).upper()


def _template_paths(repo: str) -> list:
    directory = os.path.join(repo, "templates")
    if not os.path.isdir(directory):
        return []
    return sorted(
        os.path.join(directory, name)
        for name in os.listdir(directory)
        if name.endswith(".json")
    )


def _load_repo_snapshot(repo: str):
    path = os.path.join(repo, "snapshots", "snapshot.json")
    with open(path, encoding="utf-8") as fh:
        return load_snapshot(json.load(fh))


def gate_static_validation(repo: str) -> list:
    findings = []
    try:
        snapshot = _load_repo_snapshot(repo)
    except FileNotFoundError:
        return [GateFinding("static_validation", "SNAPSHOT_MISSING", "snapshots/snapshot.json")]
    except Exception as exc:
        return [GateFinding("static_validation", _code_of(exc), str(exc))]

    catalog = Catalog(snapshot)
    for path in _template_paths(repo):
        name = os.path.basename(path)
        try:
            doc = json.loads(open(path, encoding="utf-8").read())
        except ValueError as exc:
            findings.append(
                GateFinding("static_validation", "TEMPLATE_JSON_INVALID", f"{name}: {exc}")
            )
            continue
        try:
            entry = template_from_json(doc)
        except CatalogError as exc:
            findings.append(GateFinding("static_validation", _code_of(exc), f"{name}: {exc}"))
            continue
        if entry.schema_version != snapshot.version:
            findings.append(
                GateFinding(
                    "static_validation",
                    "SCHEMA_VERSION_MISMATCH",
                    f"{name}: template pins {entry.schema_version}, snapshot is {snapshot.version}",
                )
            )
        try:
            catalog.register_template(entry)
        except CatalogError as exc:
            findings.append(GateFinding("static_validation", _code_of(exc), f"{name}: {exc}"))
    if not _template_paths(repo):
        findings.append(GateFinding("static_validation", "NO_TEMPLATES", "templates/ is empty"))
    return findings


def gate_security_scanning(repo: str) -> list:
    findings = []
    for directory in ("templates", "policy"):
        root = os.path.join(repo, directory)
        if not os.path.isdir(root):
            continue
        for name in sorted(os.listdir(root)):
            path = os.path.join(root, name)
            if not os.path.isfile(path):
                continue
            try:
                text = open(path, encoding="utf-8").read()
            except UnicodeDecodeError:
                findings.append(
                    GateFinding("security_scanning", "BINARY_ARTIFACT", f"{directory}/{name}")
                )
                continue
            for pattern_name, pattern in SECRET_PATTERNS:
                if pattern.search(text):
                    findings.append(
                        GateFinding(
                            "security_scanning",
                            "SECRET_PATTERN",
                            f"{directory}/{name}: {pattern_name}",
                        )
                    )
    return findings


def gate_policy_testing(repo: str) -> list:
    path = os.path.join(repo, "policy", "policy.json")
    try:
        policy = load_policy(json.loads(open(path, encoding="utf-8").read()))
    except FileNotFoundError:
        return [GateFinding("policy_testing", "POLICY_MISSING", "policy/policy.json")]
    except (ValueError, PolicyFormatError) as exc:
        return [GateFinding("policy_testing", _code_of(exc), str(exc))]

    previous = None
    prev_path = os.path.join(repo, "policy", "policy_previous.json")
    if os.path.exists(prev_path):
        try:
            previous = load_policy(json.loads(open(prev_path, encoding="utf-8").read()))
        except (ValueError, PolicyFormatError) as exc:
            return [GateFinding("policy_testing", _code_of(exc), f"previous: {exc}")]
    return [
        GateFinding("policy_testing", finding.code, finding.detail)
        for finding in check_policy_document(policy, previous)
    ]


def _repo_system(repo: str) -> SystemUnderTest:
    snapshot = _load_repo_snapshot(repo)
    catalog = Catalog(snapshot)
    for path in _template_paths(repo):
        catalog.register_template(template_from_json(json.loads(open(path).read())))
    policy = load_policy(json.loads(open(os.path.join(repo, "policy", "policy.json")).read()))
    return SystemUnderTest(
        snapshot=snapshot,
        catalog=catalog,
        policy=policy,
        ti_store=load_default_ti_store(),
    )


def gate_benchmark_testing(repo: str) -> list:
    findings = []
    try:
        system = _repo_system(repo)
        report = run_offline_benchmark(build_default_suite(), system)
    except (CatalogError, PolicyFormatError, SuiteTooSmall, OSError, ValueError) as exc:
        return [GateFinding("benchmark_testing", "BENCHMARK_ERROR", f"{_code_of(exc)}: {exc}")]

    checks = (
        ("schema_valid_rate", report.schema_valid_rate, MIN_SCHEMA_VALID),
        ("time_filter_compliance", report.time_filter_compliance, 1.0),
        ("unsafe_block_rate", report.unsafe_block_rate, 1.0),
    )
    for metric, value, floor in checks:
        if value < floor - _TOLERANCE:
            findings.append(
                GateFinding(
                    "benchmark_testing",
                    "THRESHOLD_BREACH",
                    f"{metric} {value:.4f} below required {floor}",
                )
            )

    baseline_path = os.path.join(repo, "benchmark_baseline.json")
    if os.path.exists(baseline_path):
        try:
            baseline = json.loads(open(baseline_path, encoding="utf-8").read())
        except ValueError as exc:
            return findings + [
                GateFinding("benchmark_testing", "BASELINE_INVALID", str(exc))
            ]
        current = {
            "schema_valid_rate": report.schema_valid_rate,
            "time_filter_compliance": report.time_filter_compliance,
            "unsafe_block_rate": report.unsafe_block_rate,
            "retrieval_mrr": report.retrieval["mrr"],
        }
        for metric, value in current.items():
            stored = baseline.get(metric)
            if stored is not None and value < stored - _TOLERANCE:
                findings.append(
                    GateFinding(
                        "benchmark_testing",
                        "BENCHMARK_REGRESSION",
                        f"{metric} {value:.4f} below baseline {stored:.4f}",
                    )
                )
    return findings


def _manifest_artifacts(repo: str) -> dict:
    artifacts = {}
    for directory in MANIFEST_DIRS:
        root = os.path.join(repo, directory)
        if not os.path.isdir(root):
            continue
        for name in sorted(os.listdir(root)):
            path = os.path.join(root, name)
            if os.path.isfile(path):
                rel = f"{directory}/{name}"
                artifacts[rel] = sha256_hex(open(path, "rb").read())
    for name in MANIFEST_EXTRA:
        path = os.path.join(repo, name)
        if os.path.isfile(path):
            artifacts[name] = sha256_hex(open(path, "rb").read())
    return artifacts


def gate_release_packaging(repo: str) -> list:
    findings = []
    manifest_path = os.path.join(repo, "manifest.json")
    try:
        manifest = json.loads(open(manifest_path, encoding="utf-8").read())
    except FileNotFoundError:
        return [GateFinding("release_packaging", "MANIFEST_MISSING", "manifest.json")]
    except ValueError as exc:
        return [GateFinding("release_packaging", "MANIFEST_INVALID", str(exc))]

    listed = manifest.get("artifacts", {})
    actual = _manifest_artifacts(repo)
    for rel, digest in sorted(actual.items()):
        if rel not in listed:
            findings.append(
                GateFinding("release_packaging", "MANIFEST_MISSING_ARTIFACT", rel)
            )
        elif listed[rel] != digest:
            findings.append(
                GateFinding("release_packaging", "MANIFEST_CHECKSUM_MISMATCH", rel)
            )
    for rel in sorted(set(listed) - set(actual)):
        findings.append(GateFinding("release_packaging", "MANIFEST_STALE_ENTRY", rel))

    for doc_name, code in (("CHANGELOG.md", "CHANGELOG_MISSING"), ("ROLLBACK.md", "ROLLBACK_MISSING")):
        path = os.path.join(repo, doc_name)
        if not os.path.isfile(path) or not open(path, encoding="utf-8").read().strip():
            findings.append(GateFinding("release_packaging", code, doc_name))
    return findings


_GATE_FUNCTIONS = {
    "static_validation": gate_static_validation,
    "security_scanning": gate_security_scanning,
    "policy_testing": gate_policy_testing,
    "benchmark_testing": gate_benchmark_testing,
    "release_packaging": gate_release_packaging,
}


def gate_run(repo_path: str):
    """Run all five gates; returns (exit_code, findings). Exit 0 iff clean."""
    findings = []
    for gate in GATES:
        findings.extend(_GATE_FUNCTIONS[gate](repo_path))
    return (0 if not findings else 1), findings


def build_fixture_repo(dest: str) -> None:
    """Materialize a clean, gate-passing repo from the shipped fixtures."""
    from importlib.resources import files

    import huntbroker.fixtures as fixtures_pkg
    from ..fixtures import fixture_text

    root = files(fixtures_pkg)
    os.makedirs(os.path.join(dest, "templates"), exist_ok=True)
    os.makedirs(os.path.join(dest, "policy"), exist_ok=True)
    os.makedirs(os.path.join(dest, "snapshots"), exist_ok=True)

    for item in sorted((root / "templates").iterdir(), key=lambda p: p.name):
        if item.name.endswith(".json"):
            with open(os.path.join(dest, "templates", item.name), "w", encoding="utf-8") as fh:
                fh.write(item.read_text(encoding="utf-8"))

    policy_text = fixture_text("policy_default.json")
    for name in ("policy.json", "policy_previous.json"):
        with open(os.path.join(dest, "policy", name), "w", encoding="utf-8") as fh:
            fh.write(policy_text)

    with open(os.path.join(dest, "snapshots", "snapshot.json"), "w", encoding="utf-8") as fh:
        fh.write(fixture_text("snapshot_default.json"))

    report = run_offline_benchmark(build_default_suite(), _repo_system(dest))
    baseline = {
        "schema_valid_rate": report.schema_valid_rate,
        "time_filter_compliance": report.time_filter_compliance,
        "unsafe_block_rate": report.unsafe_block_rate,
        "retrieval_mrr": report.retrieval["mrr"],
    }
    with open(os.path.join(dest, "benchmark_baseline.json"), "w", encoding="utf-8") as fh:
        json.dump(baseline, fh, indent=2, sort_keys=True)

    with open(os.path.join(dest, "CHANGELOG.md"), "w", encoding="utf-8") as fh:
        fh.write("# Changelog\n\n- initial release of the shipped template and policy set\n")
    with open(os.path.join(dest, "ROLLBACK.md"), "w", encoding="utf-8") as fh:
        fh.write(
            "# Rollback\n\nRestore the previous release by checking out the prior tag and\n"
            "re-running the gate runner before redeploying.\n"
        )

    manifest = {"version": "1", "artifacts": _manifest_artifacts(dest)}
    with open(os.path.join(dest, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
