import { html, joinHtml, rawHtml } from '../escape.js';
import { renderInjectionBanner } from './plan.js';
import type { EnrichmentMatch, EvidenceRow, ExecMeta, Explanation } from '../types.js';

export type SortKey = 'timestamp' | 'id';

export function sortEvidence(rows: EvidenceRow[], key: SortKey, ascending: boolean): EvidenceRow[] {
  const sorted = [...rows].sort((a, b) => (a[key] < b[key] ? -1 : a[key] > b[key] ? 1 : 0));
  return ascending ? sorted : sorted.reverse();
}

function entityChips(entities: Record<string, string>): string {
  return joinHtml(
    Object.entries(entities).map(([kind, value]) => html`<span class="badge">${kind}: ${value}</span>`),
  ).markup;
}

function attributeCell(attributes: Record<string, string>): string {
  const parts = Object.entries(attributes).map(
    ([name, value]) => html`<div class="attr"><span class="attr-name">${name}</span> <code>${value}</code></div>`,
  );
  return joinHtml(parts).markup;
}

export function renderEvidenceTable(rows: EvidenceRow[], sortKey: SortKey, ascending: boolean): string {
  if (rows.length === 0) {
    return '<p class="muted" data-role="evidence-table">No evidence returned.</p>';
  }
  const arrow = ascending ? '↑' : '↓';
  const header = (key: SortKey, label: string) =>
    html`<th data-action="sort" data-key="${key}">${label} ${sortKey === key ? arrow : ''}</th>`;
  const body = sortEvidence(rows, sortKey, ascending).map(
    (row) => html`<tr data-evidence-id="${row.id}">
      <td class="mono">${row.timestamp}</td>
      <td>${rawHtml(entityChips(row.entities))}</td>
      <td>${rawHtml(attributeCell(row.attributes))}</td>
      <td class="mono muted">${row.trace_ref}</td>
    </tr>`,
  );
  return html`<table class="evidence" data-role="evidence-table">
    <thead><tr>
      ${rawHtml(header('timestamp', 'Time'))}
      <th>Entities</th><th>Attributes</th>
      ${rawHtml(header('id', 'Trace ref'))}
    </tr></thead>
    <tbody>${joinHtml(body)}</tbody>
  </table>`;
}

/** Time-ordered timeline, one point per evidence row. */
export function renderTimeline(rows: EvidenceRow[]): string {
  const ordered = sortEvidence(rows, 'timestamp', true);
  const points = ordered.map(
    (row) => html`<li class="timeline-point" data-evidence-id="${row.id}">
      <span class="mono">${row.timestamp}</span>
      <span class="muted">${row.source_id}</span>
      ${rawHtml(entityChips(row.entities))}
    </li>`,
  );
  return html`<ol class="timeline" data-role="timeline">${joinHtml(points)}</ol>`;
}

/**
 * Observed lines are byte-exact quotes from evidence and render in a quoted,
 * monospace block; interpretation lines are rule output and carry a
 * confidence tag. The two are never mixed in one list.
 */
export function renderExplanation(explanation: Explanation): string {
  const observed = explanation.observed.map((line) => html`<li><code>${line}</code></li>`);
  const interpretation = explanation.interpretation.map(
    (entry) => html`<li>
      ${entry.text}
      <span class="badge conf-${entry.confidence}" data-role="confidence">${entry.confidence}</span>
    </li>`,
  );
  return html`<section class="explanation" data-role="explanation">
    <div class="observed-block">
      <h4>Observed (quoted from evidence)</h4>
      <ul class="observed" data-role="observed">${joinHtml(observed)}</ul>
    </div>
    <div class="interpretation-block">
      <h4>Interpretation (rule output)</h4>
      <ul class="interpretation" data-role="interpretation">${joinHtml(interpretation)}</ul>
    </div>
  </section>`;
}

export function renderEnrichment(matches: EnrichmentMatch[]): string {
  if (matches.length === 0) return '';
  const rows = matches.map(
    (m) => html`<tr>
      <td class="mono">${m.evidence_id}</td>
      <td>${m.matched_field}</td>
      <td class="mono">${m.indicator_id}</td>
      <td>${m.source}</td>
      <td>${m.confidence}</td>
      <td><span class="badge">TLP ${m.tlp}</span></td>
      <td class="mono muted">${m.valid_from} → ${m.valid_to}</td>
    </tr>`,
  );
  return html`<h4>Threat-intel matches</h4>
    <table class="enrichment" data-role="enrichment">
      <thead><tr><th>Evidence</th><th>Field</th><th>Indicator</th><th>Source</th>
        <th>Confidence</th><th>TLP</th><th>Validity</th></tr></thead>
      <tbody>${joinHtml(rows)}</tbody>
    </table>`;
}

export function renderExecutionMeta(meta: ExecMeta): string {
  if (meta.error) {
    return html`<div class="banner banner-bad" data-role="exec-error">
      Adapter reported <code>${meta.error}</code>; no evidence was returned.
    </div>`;
  }
  return html`<p class="muted" data-role="exec-meta">
    ${meta.rows_returned} rows from ${meta.adapter_id} in ${meta.latency_ms} ms
    ${meta.truncated ? '(truncated at the source cap)' : ''}
  </p>`;
}

export function renderEvidenceExplorer(
  out: {
    evidence: EvidenceRow[];
    enrichment: EnrichmentMatch[];
    explanation: Explanation;
    injection_flags: string[];
    meta: ExecMeta;
  },
  sortKey: SortKey,
  ascending: boolean,
): string {
  return html`<section class="evidence-explorer" data-role="evidence-explorer">
    <h3>Evidence</h3>
    ${rawHtml(renderInjectionBanner(out.injection_flags))}
    ${rawHtml(renderExecutionMeta(out.meta))}
    ${rawHtml(renderEvidenceTable(out.evidence, sortKey, ascending))}
    ${out.evidence.length ? rawHtml(html`<h4>Timeline</h4>${rawHtml(renderTimeline(out.evidence))}`) : ''}
    ${rawHtml(renderEnrichment(out.enrichment))}
    ${rawHtml(renderExplanation(out.explanation))}
  </section>`;
}

/** Disposition form: usefulness 1-5, accepted pivots, free-form notes. */
export function renderDispositionForm(sessionId: string): string {
  const options = [1, 2, 3, 4, 5]
    .map((n) => html`<option value="${n}" ${n === 3 ? rawHtml('selected') : ''}>${n}</option>`)
    .join('');
  return html`<form class="disposition" data-role="disposition-form" data-session="${sessionId}">
    <h3>Disposition</h3>
    <label>Usefulness
      <select name="usefulness">${rawHtml(options)}</select>
    </label>
    <label>Accepted pivots
      <input type="number" name="accepted_pivots" value="0" min="0" />
    </label>
    <label>Notes
      <textarea name="notes" rows="3"></textarea>
    </label>
    <button data-action="disposition" data-session="${sessionId}">Close session</button>
  </form>`;
}
