import { html, joinHtml, rawHtml } from '../escape.js';
import { executable, glossReason, VERDICT_GLOSSES } from '../glosses.js';
import { highlightKql } from './plan.js';
import type { Decision } from '../types.js';

const VERDICT_CLASSES: Record<string, string> = {
  Approved: 'badge-ok',
  ApprovedWithModification: 'badge-ok',
  Escalated: 'badge-warn',
  Rejected: 'badge-bad',
};

export function renderReasons(reasons: string[]): string {
  if (reasons.length === 0) return '';
  const items = reasons.map(
    (code) => html`<li><code class="reason-code">${code}</code> ${glossReason(code)}</li>`,
  );
  return html`<ul class="reasons" data-role="reasons">${joinHtml(items)}</ul>`;
}

/**
 * Decision panel with verdict badge, reason codes and glosses, approval
 * state, and the execute action. Execute stays disabled unless the decision
 * is executable; the server enforces this too, the button just mirrors it.
 */
export function renderDecisionPanel(decision: Decision, sessionId: string): string {
  const canExecute = executable(decision);
  const badgeClass = VERDICT_CLASSES[decision.verdict] ?? 'badge';
  const notes = decision.notes.map((n) => html`<li>${n}</li>`);

  const approvalBlock =
    decision.verdict === 'Escalated'
      ? decision.approval
        ? html`<div class="banner banner-ok" data-role="approval-state">
            Approved by <strong>${decision.approval.approver_id}</strong>
            at ${decision.approval.timestamp}
          </div>`
        : html`<div class="banner banner-warn" data-role="approval-state">
            Awaiting approval by a separate authorized principal.
            Execution is locked until then.
          </div>`
      : '';

  const modified = decision.modified_query
    ? html`<h4>Policy-modified query</h4>
        <pre class="kql">${rawHtml(highlightKql(decision.modified_query))}</pre>`
    : '';

  return html`<section class="decision-panel" data-role="decision-panel">
    <h3>
      Broker decision
      <span class="badge ${badgeClass}" data-role="verdict">${decision.verdict}</span>
    </h3>
    <p class="muted">${VERDICT_GLOSSES[decision.verdict] ?? ''}</p>
    ${rawHtml(renderReasons(decision.reasons))}
    ${notes.length ? rawHtml(html`<ul class="notes">${joinHtml(notes)}</ul>`) : ''}
    ${rawHtml(approvalBlock)}
    ${rawHtml(modified)}
    <button
      data-action="execute"
      data-session="${sessionId}"
      ${canExecute ? '' : rawHtml('disabled')}
    >
      Execute read-only
    </button>
  </section>`;
}
