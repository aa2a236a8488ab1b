import { escapeHtml, html, joinHtml, rawHtml } from '../escape.js';
import type { BoundQuery, HuntPlan } from '../types.js';

const KQL_KEYWORDS =
  /\b(let|where|extend|project|summarize|top|take|by|asc|desc|and|or|not|ago|now|tostring|todynamic|tolower|strlen|count|countif|min|max|datetime|true|false|null)\b/g;

// Highlight on already-escaped text: only wraps word tokens, so markup in
// query strings cannot leak through.
export function highlightKql(query: string): string {
  return escapeHtml(query).replace(KQL_KEYWORDS, '<span class="kw">$1</span>');
}

// Durations arrive as "7 days, 0:00:00"; drop a zero time part for display.
function tidyDuration(value: string): string {
  return value.replace(/, 0:00:00$/, '');
}

function paramBadges(bound: BoundQuery): string[] {
  const badges: string[] = [];
  if ('lookback' in bound.params) {
    badges.push(
      html`<span class="badge badge-ok">lookback ${tidyDuration(bound.params['lookback'] ?? '')}</span>`,
    );
  }
  if ('row_cap' in bound.params) {
    badges.push(html`<span class="badge badge-ok">cap ${bound.params['row_cap']}</span>`);
  }
  for (const [name, value] of Object.entries(bound.params)) {
    if (name === 'lookback' || name === 'row_cap') continue;
    badges.push(html`<span class="badge">${name} ${value}</span>`);
  }
  return badges;
}

export function renderInjectionBanner(flags: string[]): string {
  if (flags.length === 0) return '';
  const chips = flags.map((f) => html`<span class="badge badge-warn">${f}</span>`);
  return html`<div class="banner banner-warn" data-role="injection-banner">
    Objective text matched injection patterns: ${joinHtml(chips)}
    The text below is treated as evidence, shown quoted, and never interpreted
    as an instruction.
  </div>`;
}

/**
 * Plan preview: intent terms, ranked candidates, assumptions, grounding refs,
 * and the bound query rendered read-only. The preview itself is not
 * executable; decide/execute go through their own API calls.
 */
export function renderPlanPreview(
  plan: HuntPlan,
  bound: BoundQuery | null,
  injectionFlags: string[],
): string {
  const candidates = plan.candidates.map(
    (c) => html`<li>
      <code>${c.template_id}</code>
      <span class="score">score ${c.score.toFixed(3)}</span>
    </li>`,
  );
  const assumptions = plan.assumptions.map((a) => html`<li>${a}</li>`);
  const refs = plan.grounding_refs.map(
    ([kind, id, version]) => html`<span class="badge badge-ref">${kind}:${id}@${version}</span>`,
  );

  const boundBlock = bound
    ? html`<div class="bound-query" data-role="bound-query">
        <div class="badges">${joinHtml(paramBadges(bound))}</div>
        <pre class="kql" data-template="${bound.template_id}">${rawHtml(highlightKql(bound.query_text))}</pre>
      </div>`
    : html`<p class="muted" data-role="bound-query">No bound query is attached to this plan.</p>`;

  return html`<section class="plan-preview" data-role="plan-preview">
    ${rawHtml(renderInjectionBanner(injectionFlags))}
    <h3>Hunt plan <span class="muted">${plan.request_id}</span></h3>
    <p class="muted">intent: ${plan.intent_terms.join(', ')}</p>
    <h4>Candidate templates</h4>
    <ul class="candidates">${joinHtml(candidates)}</ul>
    ${assumptions.length
      ? rawHtml(html`<h4>Assumptions</h4><ul class="assumptions">${joinHtml(assumptions)}</ul>`)
      : ''}
    <h4>Grounding</h4>
    <div class="badges">${joinHtml(refs)}</div>
    <h4>Bound query (read-only)</h4>
    ${rawHtml(boundBlock)}
  </section>`;
}
