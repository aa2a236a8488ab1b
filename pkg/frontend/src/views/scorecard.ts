import { html, joinHtml, rawHtml } from '../escape.js';
import type { BenchmarkReport } from '../types.js';

// Promotion thresholds; mirror the service's release gate floors.
const THRESHOLDS: [keyof BenchmarkReport & string, number, string][] = [
  ['schema_valid_rate', 0.95, 'schema-valid rate'],
  ['time_filter_compliance', 1.0, 'time-filter compliance'],
  ['unsafe_block_rate', 1.0, 'unsafe block rate'],
];

function metricRow(label: string, value: number, floor: number): string {
  const pass = value >= floor;
  return html`<tr>
    <td>${label}</td>
    <td class="mono">${value.toFixed(4)}</td>
    <td class="mono muted">≥ ${floor.toFixed(2)}</td>
    <td><span class="badge ${pass ? 'badge-ok' : 'badge-bad'}">${pass ? 'pass' : 'fail'}</span></td>
  </tr>`;
}

export function renderScorecard(report: BenchmarkReport): string {
  const gateRows = THRESHOLDS.map(([key, floor, label]) =>
    metricRow(label, report[key] as number, floor),
  );
  const mismatches = report.per_case.filter((c) => c.verdict !== c.expected_verdict);
  const caseRows = mismatches.map(
    (c) => html`<tr>
      <td class="mono">${c.id}</td>
      <td>${c.class}</td>
      <td>${c.expected_verdict}</td>
      <td><span class="badge badge-bad">${c.verdict ?? 'error'}</span></td>
    </tr>`,
  );
  const r = report.retrieval;
  return html`<section class="scorecard" data-role="scorecard">
    <h3>Benchmark scorecard <span class="muted mono">${report.suite_id}</span></h3>
    <p class="muted">
      ${report.case_count} cases against snapshot ${report.fingerprint.snapshot_version},
      policy ${report.fingerprint.policy_version}
    </p>
    <table data-role="gate-table">
      <thead><tr><th>Metric</th><th>Value</th><th>Floor</th><th></th></tr></thead>
      <tbody>${joinHtml(gateRows)}</tbody>
    </table>
    <p>
      Retrieval at k=${r.k}:
      <span class="badge">P ${r.p_at_k.toFixed(3)}</span>
      <span class="badge">recall ${r.recall_at_k.toFixed(3)}</span>
      <span class="badge">MRR ${r.mrr.toFixed(3)}</span>
      <span class="badge">nDCG ${r.ndcg.toFixed(3)}</span>
      <span class="badge">stale intel ${report.stale_intel_matches}</span>
    </p>
    ${mismatches.length
      ? rawHtml(html`<h4>Verdict mismatches</h4>
          <table data-role="mismatch-table">
            <thead><tr><th>Case</th><th>Class</th><th>Expected</th><th>Got</th></tr></thead>
            <tbody>${joinHtml(caseRows)}</tbody>
          </table>`)
      : rawHtml('<p class="muted" data-role="mismatch-table">Every case matched its expected verdict.</p>')}
  </section>`;
}
