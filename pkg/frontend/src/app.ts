import { ApiClient, ApiError, signUser, type Credentials } from './api.js';
import { html, joinHtml, rawHtml } from './escape.js';
import { renderApprovalQueue } from './views/approvals.js';
import { renderDecisionPanel } from './views/decision.js';
import { renderDispositionForm, renderEvidenceExplorer, type SortKey } from './views/evidence.js';
import { renderPlanPreview } from './views/plan.js';
import { renderScorecard } from './views/scorecard.js';
import { renderTrace } from './views/trace.js';
import type {
  ExecMeta,
  Principal,
  SessionDetail,
  SourceDescriptor,
  TraceResponse,
} from './types.js';

interface SessionCache {
  detail: SessionDetail;
  trace?: TraceResponse;
  meta?: ExecMeta;
}

export interface AppOptions {
  baseUrl: string;
  /** Session-state poll interval in ms; 0 disables polling (tests). */
  pollMs?: number;
}

export class App {
  private client: ApiClient;
  private principals: Principal[] = [];
  private sources: SourceDescriptor[] = [];
  private cache = new Map<string, SessionCache>();
  private sortKey: SortKey = 'timestamp';
  private ascending = false;
  private error: string | null = null;
  private pending: Promise<void> = Promise.resolve();
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(private root: HTMLElement, private options: AppOptions) {
    this.client = new ApiClient(options.baseUrl);
    root.addEventListener('click', (ev) => this.onClick(ev));
    root.addEventListener('submit', (ev) => this.onSubmit(ev));
    window.addEventListener('hashchange', () => this.run(() => this.render()));
  }

  /** Resolves when every queued action so far has finished rendering. */
  settle(): Promise<void> {
    return this.pending;
  }

  get currentUser(): string | null {
    return this.client.creds?.user ?? null;
  }

  // Serialize async actions so renders never interleave.
  private run(task: () => Promise<void>): Promise<void> {
    this.pending = this.pending.then(task).catch(async (err) => {
      this.error = err instanceof ApiError ? describeApiError(err) : String(err);
      try {
        await this.render();
      } catch {
        // the route itself is what failed; show the banner alone
        this.root.innerHTML = this.renderNav() + this.banner();
      }
    });
    return this.pending;
  }

  start(): Promise<void> {
    return this.run(async () => {
      const { principals } = await this.client.principals();
      this.principals = principals;
      await this.render();
    });
  }

  private route(): string {
    return window.location.hash || '#/sessions';
  }

  private async render(): Promise<void> {
    if (!this.client.creds) {
      this.root.innerHTML = this.banner() + this.renderLogin();
      return;
    }
    const route = this.route();
    let body: string;
    if (route.startsWith('#/session/')) {
      body = await this.renderSession(route.slice('#/session/'.length));
    } else if (route === '#/approvals') {
      const { approvals } = await this.client.approvals();
      body = renderApprovalQueue(approvals, this.client.creds.user);
    } else if (route === '#/scorecard') {
      body = renderScorecard(await this.client.benchmark());
    } else {
      body = await this.renderSessionList();
    }
    this.root.innerHTML = this.renderNav() + this.banner() + body;
    this.schedulePoll(route);
  }

  /** Render and consume the pending error, if any. */
  private banner(): string {
    if (!this.error) return '';
    const markup = html`<div class="banner banner-bad" data-role="error-banner">${this.error}</div>`;
    this.error = null;
    return markup;
  }

  private schedulePoll(route: string): void {
    if (this.pollTimer) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
    const pollMs = this.options.pollMs ?? 5000;
    if (pollMs > 0 && route.startsWith('#/session/')) {
      const id = route.slice('#/session/'.length);
      this.pollTimer = setInterval(() => {
        void this.run(async () => {
          if (this.route() !== route) return;
          await this.loadSession(id);
          await this.render();
        });
      }, pollMs);
    }
  }

  private renderNav(): string {
    const user = this.client.creds?.user ?? '';
    return html`<nav>
      <a href="#/sessions">Sessions</a>
      <a href="#/approvals">Approvals</a>
      <a href="#/scorecard">Scorecard</a>
      <span class="spacer"></span>
      <span class="muted" data-role="whoami">${user}</span>
      <button data-action="logout">Sign out</button>
    </nav>`;
  }

  private renderLogin(): string {
    const options = this.principals.map(
      (p) => html`<option value="${p.user_id}">${p.user_id} (${p.role})</option>`,
    );
    return html`<form data-role="login-form">
      <h3>Analyst console sign-in</h3>
      <label>Principal
        <select name="user">${joinHtml(options)}</select>
      </label>
      <label>Shared secret
        <input type="password" name="secret" autocomplete="off" />
      </label>
      <label>Signature (hex; overrides secret when set)
        <input type="text" name="signature" autocomplete="off" class="mono" />
      </label>
      <button data-action="login">Sign in</button>
    </form>`;
  }

  private async renderSessionList(): Promise<string> {
    const { sessions } = await this.client.listSessions();
    const rows = sessions.map(
      (s) => html`<tr>
        <td><a href="#/session/${s.id}" class="mono">${s.id}</a></td>
        <td>${s.case_id}</td>
        <td>${s.requester}</td>
        <td><span class="badge">${s.state}</span></td>
        <td class="mono muted">${s.created_at}</td>
      </tr>`,
    );
    const table = sessions.length
      ? html`<table data-role="session-list">
          <thead><tr><th>Session</th><th>Case</th><th>Requester</th><th>State</th><th>Created</th></tr></thead>
          <tbody>${joinHtml(rows)}</tbody>
        </table>`
      : '<p class="muted" data-role="session-list">No sessions yet.</p>';
    return html`<section>
      <h3>Hunt sessions</h3>
      <form data-role="new-session-form">
        <input name="case_id" placeholder="case id" required />
        <button data-action="new-session">New session</button>
      </form>
      ${rawHtml(table)}
    </section>`;
  }

  private async loadSession(id: string): Promise<SessionCache> {
    const detail = await this.client.session(id);
    const trace = await this.client.trace(id);
    const prior = this.cache.get(id);
    const entry: SessionCache = { detail, trace, meta: prior?.meta };
    this.cache.set(id, entry);
    return entry;
  }

  private async renderSession(id: string): Promise<string> {
    const entry = this.cache.get(id) ?? (await this.loadSession(id));
    const { detail, trace, meta } = entry;
    const parts: string[] = [
      html`<h2>
        Session <span class="mono">${detail.id}</span>
        <span class="badge" data-role="session-state">${detail.state}</span>
        <span class="muted">case ${detail.case_id}</span>
      </h2>`,
    ];

    if (detail.state === 'Open' || !detail.plan) {
      parts.push(await this.renderObjectiveForm(id));
    } else {
      parts.push(html`<p data-role="objective">Objective: ${detail.objective ?? ''}</p>`);
      parts.push(renderPlanPreview(detail.plan, detail.bound ?? null, detail.injection_flags ?? []));
      if (!detail.decision) {
        parts.push(this.renderDecideForm(id, detail));
      }
    }

    if (detail.decision) {
      parts.push(renderDecisionPanel(detail.decision, id));
      if (detail.decision.verdict === 'Rejected') {
        parts.push(await this.renderObjectiveForm(id));
      }
    }

    if (detail.state === 'Executed' || detail.state === 'Closed') {
      parts.push(
        renderEvidenceExplorer(
          {
            evidence: detail.evidence ?? [],
            enrichment: detail.enrichment ?? [],
            explanation: detail.explanation ?? { observed: [], interpretation: [] },
            injection_flags: detail.injection_flags ?? [],
            meta: meta ?? placeholderMeta(detail),
          },
          this.sortKey,
          this.ascending,
        ),
      );
    }
    if (detail.state === 'Executed') {
      parts.push(renderDispositionForm(id));
    }
    if (detail.state === 'Closed' && detail.disposition) {
      parts.push(html`<div class="banner banner-ok" data-role="disposition-summary">
        Closed with usefulness ${String(detail.disposition['usefulness'] ?? '')}.
      </div>`);
    }
    if (trace) {
      parts.push(renderTrace(trace));
    }
    return parts.join('');
  }

  // The broker decides on the bound query; the form only triggers the call.
  private renderDecideForm(id: string, detail: SessionDetail): string {
    const template = detail.bound?.template_id ?? '';
    return html`<form data-role="decide-form" data-session="${id}">
      <button data-action="decide">Request broker decision on ${template}</button>
    </form>`;
  }

  private async renderObjectiveForm(id: string): Promise<string> {
    if (this.sources.length === 0) {
      this.sources = (await this.client.sources()).sources;
    }
    const options = this.sources.map(
      (s) => html`<option value="${s.source_id}" ${s.source_id === 'graph_hunting' ? rawHtml('selected') : ''}>
        ${s.source_id} (${s.tables.length} tables, cap ${s.max_rows})
      </option>`,
    );
    return html`<form data-role="objective-form" data-session="${id}">
      <h3>Hunt request</h3>
      <label>Objective
        <textarea name="objective" rows="2" required></textarea>
      </label>
      <label>Window
        <input name="window" value="7d" />
      </label>
      <label>Source
        <select name="source">${joinHtml(options)}</select>
      </label>
      <label>Entities (kind=value per line)
        <textarea name="entities" rows="2"></textarea>
      </label>
      <button data-action="request" data-session="${id}">Plan hunt</button>
    </form>`;
  }

  // -- event handling ----------------------------------------------------

  private onClick(ev: Event): void {
    const target = (ev.target as HTMLElement).closest('[data-action]');
    if (!(target instanceof HTMLElement)) return;
    const action = target.dataset['action'];
    if (action === 'sort') {
      const key = target.dataset['key'] as SortKey;
      this.ascending = this.sortKey === key ? !this.ascending : true;
      this.sortKey = key;
      void this.run(() => this.render());
      return;
    }
    if (target instanceof HTMLButtonElement && target.form) return; // submit handles it
    if (action === 'logout') {
      this.client = new ApiClient(this.options.baseUrl);
      this.cache.clear();
      void this.run(() => this.render());
    } else if (action === 'execute') {
      const id = target.dataset['session']!;
      void this.run(async () => {
        const out = await this.client.execute(id);
        await this.loadSession(id);
        this.cache.get(id)!.meta = out.meta;
        await this.render();
      });
    } else if (action === 'approve') {
      const decisionId = target.dataset['decision']!;
      void this.run(async () => {
        await this.client.approve(decisionId);
        this.cache.clear(); // decision state changed under a session we may have cached
        await this.render();
      });
    }
  }

  private onSubmit(ev: Event): void {
    ev.preventDefault();
    const form = ev.target as HTMLFormElement;
    const role = form.dataset['role'];
    const data = new FormData(form);
    const field = (name: string) => String(data.get(name) ?? '').trim();

    if (role === 'login-form') {
      const user = field('user');
      const secret = field('secret');
      const pasted = field('signature');
      void this.run(async () => {
        const signature = pasted || (await signUser(secret, user));
        const creds: Credentials = { user, signature };
        const candidate = new ApiClient(this.options.baseUrl, creds);
        await candidate.sources(); // cheap authenticated probe; throws on bad creds
        this.client = candidate;
        window.location.hash = '#/sessions';
        await this.render();
      });
    } else if (role === 'new-session-form') {
      void this.run(async () => {
        const session = await this.client.createSession(field('case_id'));
        window.location.hash = `#/session/${session.id}`;
        await this.render();
      });
    } else if (role === 'objective-form') {
      const id = form.dataset['session']!;
      const entities = field('entities')
        .split('\n')
        .map((line) => line.trim())
        .filter(Boolean)
        .map((line) => {
          const [kind, ...rest] = line.split('=');
          return [kind.trim(), rest.join('=').trim()] as [string, string];
        });
      const params: Record<string, string> = {};
      for (const [kind, value] of entities) {
        params[kind] = value; // template placeholders share entity names
      }
      void this.run(async () => {
        await this.client.submitRequest(id, {
          objective: field('objective'),
          window: field('window') || '7d',
          source: field('source'),
          entities,
          params,
        });
        await this.loadSession(id);
        await this.render();
      });
    } else if (role === 'decide-form') {
      const id = form.dataset['session']!;
      void this.run(async () => {
        try {
          await this.client.decide(id);
        } catch (err) {
          // a rejection still produces a decision; reload so its reason
          // codes render in the panel alongside the banner
          if (!(err instanceof ApiError && err.status === 422)) throw err;
          this.error = describeApiError(err);
        }
        await this.loadSession(id);
        await this.render();
      });
    } else if (role === 'disposition-form') {
      const id = form.dataset['session']!;
      void this.run(async () => {
        await this.client.disposition(id, {
          usefulness: Number(field('usefulness')),
          accepted_pivots: Number(field('accepted_pivots') || '0'),
          rejected_recommendations: [],
          notes: field('notes'),
        });
        await this.loadSession(id);
        await this.render();
      });
    }
  }
}

function describeApiError(err: ApiError): string {
  const p = err.payload;
  if (p.decision) {
    // rejection responses carry the decision itself, not an error code
    return `${err.status} ${p.decision.verdict}: ${p.decision.reasons.join(', ')}`;
  }
  const detail = typeof p.detail === 'string' ? p.detail : JSON.stringify(p.detail ?? '');
  return `${err.status} ${p.error ?? 'error'}: ${detail}`;
}

function placeholderMeta(detail: SessionDetail): ExecMeta {
  // detail JSON does not persist adapter meta; synthesize a neutral one
  return {
    adapter_id: detail.source_id ?? '',
    started_at: '',
    latency_ms: 0,
    rows_returned: detail.evidence?.length ?? 0,
    truncated: false,
    error: null,
  };
}

export function mount(root: HTMLElement, options: AppOptions): App {
  const app = new App(root, options);
  void app.start();
  return app;
}
