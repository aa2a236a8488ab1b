// Mirrors of the service wire JSON. The console never invents fields and
// never rewrites KQL text; these types are read-only views of what the API
// returns.

export type Verdict =
  | 'Approved'
  | 'ApprovedWithModification'
  | 'Escalated'
  | 'Rejected';

export type SessionState =
  | 'Open'
  | 'PlanReady'
  | 'Decided'
  | 'AwaitingApproval'
  | 'Executed'
  | 'Closed';

export interface Principal {
  user_id: string;
  role: string;
  signature: string | null;
}

export interface SourceDescriptor {
  source_id: string;
  tables: string[];
  max_rows: number;
  retention_days: number;
}

export interface SessionView {
  id: string;
  case_id: string;
  requester: string;
  state: SessionState;
  created_at: string;
  source_id: string | null;
  decision_id: string | null;
}

export interface Candidate {
  template_id: string;
  score: number;
  suggested_params: Record<string, unknown>;
}

export interface HuntPlan {
  request_id: string;
  intent_terms: string[];
  candidates: Candidate[];
  assumptions: string[];
  grounding_refs: [string, string, string][];
}

export interface BoundQuery {
  template_id: string;
  query_text: string;
  params: Record<string, string>;
}

export interface Approval {
  approver_id: string;
  timestamp: string;
}

export interface Decision {
  id: string;
  request_id: string;
  requester_id: string;
  verdict: Verdict;
  reasons: string[];
  modified_query: string | null;
  notes: string[];
  approval: Approval | null;
}

export interface EvidenceRow {
  id: string;
  timestamp: string;
  source_id: string;
  entities: Record<string, string>;
  attributes: Record<string, string>;
  query_hash: string;
  trace_ref: string;
}

export interface InterpretationLine {
  text: string;
  confidence: 'high' | 'medium' | 'low';
}

export interface Explanation {
  observed: string[];
  interpretation: InterpretationLine[];
}

export interface EnrichmentMatch {
  evidence_id: string;
  indicator_id: string;
  matched_field: string;
  source: string;
  confidence: number;
  tlp: string;
  valid_from: string;
  valid_to: string;
}

export interface ExecMeta {
  adapter_id: string;
  started_at: string;
  latency_ms: number;
  rows_returned: number;
  truncated: boolean;
  error: string | null;
}

export interface TraceRecord {
  seq: number;
  session_id: string;
  stage: string;
  timestamp: string;
  actor: string;
  payload_digest: string;
  prev_hash: string;
  record_hash: string;
}

export interface TraceResponse {
  records: TraceRecord[];
  completeness: { complete: boolean; missing: string[] } | null;
  verify: { intact: boolean; first_break: number | null };
}

export interface RequestResponse {
  session: SessionView;
  plan: HuntPlan;
  bound: BoundQuery | null;
  injection_flags: string[];
}

export interface DecideResponse {
  decision: Decision;
  session: SessionView;
}

export interface ExecuteResponse {
  evidence: EvidenceRow[];
  enrichment: EnrichmentMatch[];
  explanation: Explanation;
  injection_flags: string[];
  meta: ExecMeta;
}

export interface ApprovalItem {
  decision: Decision;
  session_id: string;
}

export interface RetrievalBlock {
  p_at_k: number;
  recall_at_k: number;
  mrr: number;
  ndcg: number;
  k: number;
}

export interface PerCaseOutcome {
  id: string;
  class: string;
  expected_verdict: string;
  verdict: string | null;
  reasons: string[];
  schema_valid: boolean | null;
  executable: boolean | null;
  final_has_lookback?: boolean | null;
  retrieval?: RetrievalBlock | null;
  error: string | null;
}

export interface ReportFingerprint {
  snapshot_version: string;
  policy_version: string;
  template_checksums: Record<string, string>;
}

export interface BenchmarkReport {
  suite_id: string;
  case_count: number;
  schema_valid_rate: number;
  time_filter_compliance: number;
  unsafe_block_rate: number;
  stale_intel_matches: number;
  retrieval: RetrievalBlock;
  per_case: PerCaseOutcome[];
  notes: string[];
  fingerprint: ReportFingerprint;
}

export interface SessionDetail extends SessionView {
  objective?: string | null;
  entities?: [string, string][];
  plan?: HuntPlan | null;
  bound?: BoundQuery | null;
  injection_flags?: string[];
  decision?: Decision;
  evidence?: EvidenceRow[];
  enrichment?: EnrichmentMatch[];
  explanation?: Explanation | null;
  disposition?: Record<string, unknown> | null;
}

export interface ApiErrorPayload {
  error: string;
  detail: unknown;
  decision?: Decision;
  [extra: string]: unknown;
}
