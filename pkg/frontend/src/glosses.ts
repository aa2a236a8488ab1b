// Human-readable glosses for the frozen wire enumerations. Codes arrive from
// the API; an unknown code still renders (as itself) rather than crashing.

export const REASON_GLOSSES: Record<string, string> = {
  QUERY_PARSE_FAILED: 'query text does not parse in the supported KQL subset',
  FREEFORM_NOT_PERMITTED: 'role may only run reviewed templates, not freeform KQL',
  UNKNOWN_TABLE: 'query references a table missing from the schema snapshot',
  UNKNOWN_COLUMN: 'query references a column missing from the schema snapshot',
  SOURCE_NOT_ALLOWED: 'role is not allowed to query this source',
  TABLE_NOT_ALLOWED: 'table is outside the allowlist for this source or role',
  MISSING_TIME_FILTER: 'query has no time-column lower bound',
  LOOKBACK_EXCEEDS_MAX: 'lookback window exceeds the policy maximum',
  MISSING_ROW_BOUND: 'query has no explicit row limit (top or take)',
  ROW_BOUND_EXCEEDS_CAP: 'row limit exceeds the hard cap',
  SENSITIVE_PROJECTION: 'query projects sensitive columns; approval required',
  COST_BUDGET_EXCEEDED: 'estimated scan cost exceeds the policy budget',
  TI_CONFIDENCE_TOO_LOW: 'known indicators for an entity are expired or below the confidence floor',
  OBJECTIVE_INJECTION_SUSPECTED: 'objective text looks like an instruction injection attempt',
};

export function glossReason(code: string): string {
  return REASON_GLOSSES[code] ?? code;
}

export const VERDICT_GLOSSES: Record<string, string> = {
  Approved: 'approved for execution',
  ApprovedWithModification: 'approved after a policy rewrite (row cap applied)',
  Escalated: 'requires approval by a separate authorized principal',
  Rejected: 'blocked; amend the request and resubmit',
};

export const STAGE_ORDER = [
  'RequestIntake',
  'Grounding',
  'Generation',
  'BrokerDecision',
  'Execution',
  'Disposition',
];

export function executable(decision: { verdict: string; approval: unknown | null }): boolean {
  if (decision.verdict === 'Approved' || decision.verdict === 'ApprovedWithModification') {
    return true;
  }
  return decision.verdict === 'Escalated' && decision.approval != null;
}
