import { html, joinHtml, rawHtml } from '../escape.js';
import { renderReasons } from './decision.js';
import type { ApprovalItem } from '../types.js';

/**
 * Pending escalations. An item the current user authored renders with the
 * approve action disabled and a separation-of-duties note; the server would
 * reject the call anyway, the queue just does not offer it.
 */
export function renderApprovalQueue(items: ApprovalItem[], currentUser: string): string {
  if (items.length === 0) {
    return '<section data-role="approval-queue"><h3>Approvals</h3><p class="muted">No escalations waiting.</p></section>';
  }
  const cards = items.map(({ decision, session_id }) => {
    const own = decision.requester_id === currentUser;
    const action = own
      ? html`<button data-action="approve" data-decision="${decision.id}" disabled>Approve</button>
          <p class="muted" data-role="sod-note">
            Separation of duties: you requested this hunt, so you cannot approve it.
          </p>`
      : html`<button data-action="approve" data-decision="${decision.id}">Approve</button>`;
    return html`<div class="approval-card" data-decision-id="${decision.id}">
      <p>
        <a href="#/session/${session_id}" class="mono">${session_id}</a>
        requested by <strong>${decision.requester_id}</strong>
      </p>
      ${rawHtml(renderReasons(decision.reasons))}
      ${rawHtml(action)}
    </div>`;
  });
  return html`<section data-role="approval-queue">
    <h3>Approvals</h3>
    ${joinHtml(cards)}
  </section>`;
}
