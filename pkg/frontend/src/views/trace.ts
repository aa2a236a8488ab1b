import { html, joinHtml, rawHtml } from '../escape.js';
import type { TraceResponse } from '../types.js';

function short(hash: string): string {
  return hash.slice(0, 12);
}

/** Audit-chain browser: stage rows plus intact/complete badges. */
export function renderTrace(trace: TraceResponse): string {
  const intact = trace.verify.intact
    ? '<span class="badge badge-ok" data-role="chain-intact">chain intact</span>'
    : html`<span class="badge badge-bad" data-role="chain-intact">chain broken at ${trace.verify.first_break}</span>`;
  const completeness = trace.completeness
    ? trace.completeness.complete
      ? '<span class="badge badge-ok" data-role="trace-complete">complete</span>'
      : html`<span class="badge badge-warn" data-role="trace-complete">missing ${trace.completeness.missing.join(', ')}</span>`
    : '';
  const rows = trace.records.map(
    (r) => html`<tr data-stage="${r.stage}">
      <td>${r.seq}</td>
      <td><strong>${r.stage}</strong></td>
      <td>${r.actor}</td>
      <td class="mono">${r.timestamp}</td>
      <td class="mono muted">${short(r.payload_digest)}</td>
      <td class="mono muted">${short(r.prev_hash)} → ${short(r.record_hash)}</td>
    </tr>`,
  );
  return html`<section class="trace" data-role="trace">
    <h3>Audit trace ${rawHtml(intact)} ${rawHtml(completeness)}</h3>
    <table>
      <thead><tr><th>#</th><th>Stage</th><th>Actor</th><th>Time</th><th>Payload</th><th>Chain</th></tr></thead>
      <tbody>${joinHtml(rows)}</tbody>
    </table>
  </section>`;
}
