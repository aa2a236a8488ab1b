"""Command line front end: API server, benchmark, synth data, gates, trace audit.

Exit codes follow one convention everywhere: 0 success, 1 gate or benchmark
failure, 2 usage error (bad flags, unknown scenario or toggle).
"""

import json
import os
import sys

import click

from ..audit import verify_export
from ..evalkit import (
    UnknownToggle,
    SystemUnderTest,
    ablate,
    build_default_suite,
    run_offline_benchmark,
)
from ..synth import SynthError, generate_synthetic
from .app import ServiceConfig, build_app
from .gates import MIN_SCHEMA_VALID, gate_run


@click.group()
def main() -> None:
    """Governed query broker for threat hunting."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--secret", default=None, help="HMAC secret for request signatures.")
@click.option("--state-file", default=None, type=click.Path(), help="Persist sessions to this JSON file.")
@click.option("--seed", default=42, show_default=True, type=int, help="Dataset seed.")
def serve(host: str, port: int, secret, state_file, seed: int) -> None:
    """Run the HTTP API."""
    import uvicorn

    kwargs = {"seed": seed, "state_path": state_file}
    if secret is not None:
        kwargs["secret"] = secret
    uvicorn.run(build_app(ServiceConfig(**kwargs)), host=host, port=port)


@main.group()
def bench() -> None:
    """Offline benchmark and ablations."""


def _gate_results(report) -> dict:
    return {
        "schema_valid": report.schema_valid_rate >= MIN_SCHEMA_VALID,
        "time_filter": report.time_filter_compliance == 1.0,
        "unsafe_block": report.unsafe_block_rate == 1.0,
    }


@bench.command("run")
def bench_run() -> None:
    """Run the shipped suite; exit 1 if any benchmark gate fails."""
    report = run_offline_benchmark(build_default_suite(), SystemUnderTest.default())
    gates = _gate_results(report)
    click.echo(json.dumps(
        {"report": report.to_json(), "gates": gates, "passed": all(gates.values())},
        sort_keys=True,
    ))
    sys.exit(0 if all(gates.values()) else 1)


@bench.command("ablate")
@click.option("--toggle", required=True, help="Safeguard to disable for the run.")
def bench_ablate(toggle: str) -> None:
    """Run one ablation; exit 1 if the directional prediction does not hold."""
    try:
        report = ablate(toggle, build_default_suite())
    except UnknownToggle as exc:
        raise click.UsageError(str(exc))
    click.echo(json.dumps(report.to_json(), sort_keys=True))
    sys.exit(0 if report.holds else 1)


@main.group()
def synth() -> None:
    """Synthetic telemetry generation."""


@synth.command("gen")
@click.option("--seed", required=True, type=int)
@click.option("--scenario", required=True)
@click.option("--size", required=True, type=int)
@click.option("--out", default=None, type=click.Path(), help="Directory to write dataset and label files.")
def synth_gen(seed: int, scenario: str, size: int, out) -> None:
    """Generate a seeded scenario dataset with ground-truth labels."""
    try:
        dataset, truth = generate_synthetic(seed, scenario, size)
    except SynthError as exc:
        raise click.UsageError(str(exc))
    labels = [json.loads(line) for line in truth.to_jsonl().splitlines() if line.strip()]
    if out is None:
        click.echo(json.dumps(
            {"scenario": scenario, "seed": seed, "dataset": dataset.to_json(), "labels": labels},
            sort_keys=True,
        ))
        return
    os.makedirs(out, exist_ok=True)
    stem = f"{scenario}-seed{seed}"
    dataset_path = os.path.join(out, f"{stem}.json")
    labels_path = os.path.join(out, f"{stem}.labels.jsonl")
    with open(dataset_path, "w", encoding="utf-8") as fh:
        fh.write(dataset.dumps())
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write(truth.to_jsonl())
    click.echo(json.dumps(
        {"dataset_path": dataset_path, "labels_path": labels_path, "label_count": len(labels)},
        sort_keys=True,
    ))


@main.group("gate")
def gate_group() -> None:
    """Release gate runner."""


@gate_group.command("run")
@click.option("--repo", required=True, type=click.Path(exists=True, file_okay=False))
def gate_run_cmd(repo: str) -> None:
    """Run all five release gates over a template/policy repository."""
    code, findings = gate_run(repo)
    click.echo(json.dumps(
        {"exit_code": code, "findings": [f.to_json() for f in findings]},
        sort_keys=True,
    ))
    sys.exit(code)


@main.group("trace")
def trace_group() -> None:
    """Audit trace tools."""


@trace_group.command("verify")
@click.option("--export", "export_path", required=True, type=click.Path(exists=True, dir_okay=False))
def trace_verify(export_path: str) -> None:
    """Re-verify an exported trace; exit 1 with first_break on tampering."""
    try:
        doc = json.loads(open(export_path, encoding="utf-8").read())
    except ValueError as exc:
        raise click.UsageError(f"export file is not valid JSON: {exc}")
    if not isinstance(doc, dict) or "records" not in doc:
        raise click.UsageError("export file must contain a records field")
    outcome = verify_export(doc["records"], doc.get("payloads"))
    click.echo(json.dumps(outcome, sort_keys=True))
    sys.exit(0 if outcome["intact"] else 1)


if __name__ == "__main__":
    main()
