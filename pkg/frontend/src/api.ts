import type {
  ApiErrorPayload,
  ApprovalItem,
  BenchmarkReport,
  DecideResponse,
  ExecuteResponse,
  Principal,
  RequestResponse,
  SessionDetail,
  SessionView,
  SourceDescriptor,
  TraceResponse,
} from './types.js';

export interface Credentials {
  user: string;
  signature: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly payload: ApiErrorPayload) {
    super(`${payload.error}: ${JSON.stringify(payload.detail)}`);
    this.name = 'ApiError';
  }
}

/**
 * Compute the X-Hunt-Signature header value: HMAC-SHA256(secret, user id)
 * as lowercase hex. Requires Web Crypto (any modern browser, node >= 20).
 */
export async function signUser(secret: string, userId: string): Promise<string> {
  const subtle = globalThis.crypto?.subtle;
  if (!subtle) {
    throw new Error('Web Crypto unavailable; paste a precomputed signature instead');
  }
  const enc = new TextEncoder();
  const key = await subtle.importKey(
    'raw',
    enc.encode(secret),
    { name: 'HMAC', hash: 'SHA-256' },
    false,
    ['sign'],
  );
  const mac = await subtle.sign('HMAC', key, enc.encode(userId));
  return Array.from(new Uint8Array(mac), (b) => b.toString(16).padStart(2, '0')).join('');
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    public creds: Credentials | null = null,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? globalThis.fetch.bind(globalThis);
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.creds) {
      headers['X-Hunt-User'] = this.creds.user;
      headers['X-Hunt-Signature'] = this.creds.signature;
    }
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json();
    if (!res.ok) {
      throw new ApiError(res.status, payload as ApiErrorPayload);
    }
    return payload as T;
  }

  principals(): Promise<{ principals: Principal[] }> {
    return this.call('GET', '/principals');
  }

  sources(): Promise<{ sources: SourceDescriptor[] }> {
    return this.call('GET', '/sources');
  }

  createSession(caseId: string): Promise<SessionView> {
    return this.call('POST', '/sessions', { case_id: caseId });
  }

  listSessions(): Promise<{ sessions: SessionView[] }> {
    return this.call('GET', '/sessions');
  }

  session(id: string): Promise<SessionDetail> {
    return this.call('GET', `/sessions/${id}`);
  }

  submitRequest(
    id: string,
    body: {
      objective: string;
      window: string;
      source: string;
      entities: [string, string][];
      params: Record<string, string>;
    },
  ): Promise<RequestResponse> {
    return this.call('POST', `/sessions/${id}/request`, body);
  }

  plan(id: string): Promise<RequestResponse> {
    return this.call('GET', `/sessions/${id}/plan`);
  }

  // decides on the query bound at request time; there is nothing to send
  decide(id: string): Promise<DecideResponse> {
    return this.call('POST', `/sessions/${id}/decide`, {});
  }

  approve(decisionId: string): Promise<DecideResponse> {
    return this.call('POST', `/decisions/${decisionId}/approve`, {});
  }

  execute(id: string): Promise<ExecuteResponse> {
    return this.call('POST', `/sessions/${id}/execute`, {});
  }

  disposition(
    id: string,
    body: { usefulness: number; accepted_pivots: number; rejected_recommendations: string[]; notes: string },
  ): Promise<{ session: SessionView; disposition: Record<string, unknown> }> {
    return this.call('POST', `/sessions/${id}/disposition`, body);
  }

  trace(id: string): Promise<TraceResponse> {
    return this.call('GET', `/sessions/${id}/trace`);
  }

  approvals(): Promise<{ approvals: ApprovalItem[] }> {
    return this.call('GET', '/approvals');
  }

  benchmark(): Promise<BenchmarkReport> {
    return this.call('GET', '/reports/benchmark');
  }
}
