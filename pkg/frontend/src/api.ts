// Fetch client for the annotation service JSON API.

export interface SuggestionItem {
  text: string;
  score: number;
  terminated: boolean;
}

export interface SuggestResponse {
  mode: string;
  region: { prefix: string; human_start: string; suffix: string; replaced: string };
  suggestions: SuggestionItem[];
  previews: string[];
  latency_ms: number;
  trigger_index: number;
}

export interface SummaryOffer {
  key: string;
  text: string;
}

export interface ServedDocument {
  document_id: string;
  document: string;
  draft_summary: string;
  position: number;
  total: number;
  summaries?: SummaryOffer[];
}

export interface SessionInfo {
  session_id: string;
  document_ids: string[];
}

export interface EvaluatePayload {
  document_id?: string;
  key: string;
  rating: number;
  issues: boolean[];
  verdict: string;
}

export interface PortalConfig {
  k: number;
  backend: string;
  issue_questions: string[];
  tasks: string[];
  verdicts: string[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface PortalApi {
  config(): Promise<PortalConfig>;
  createSession(annotatorId: string, task: string, documentIds?: string[]): Promise<SessionInfo>;
  next(sessionId: string): Promise<ServedDocument>;
  prev(sessionId: string): Promise<ServedDocument>;
  suggest(
    sessionId: string,
    oldSummary: string,
    newSummary: string,
    signal?: AbortSignal,
  ): Promise<SuggestResponse>;
  choose(sessionId: string, index: number): Promise<{ summary: string }>;
  save(sessionId: string, finalSummary: string, clientActiveMs?: number): Promise<unknown>;
  evaluate(sessionId: string, payload: EvaluatePayload): Promise<unknown>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function requestJson<T>(
  fetchFn: FetchLike,
  url: string,
  init?: RequestInit,
): Promise<T> {
  const response = await fetchFn(url, init);
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    body = null;
  }
  if (!response.ok) {
    const message =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : `${response.status} ${response.statusText}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

function post(body: unknown, signal?: AbortSignal): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
    signal,
  };
}

export function makeApi(base = "", fetchFn: FetchLike = fetch): PortalApi {
  return {
    config: () => requestJson(fetchFn, `${base}/api/config`),
    createSession: (annotatorId, task, documentIds) =>
      requestJson(
        fetchFn,
        `${base}/api/sessions`,
        post({ annotator_id: annotatorId, task, document_ids: documentIds ?? null }),
      ),
    next: (sessionId) => requestJson(fetchFn, `${base}/api/sessions/${sessionId}/next`),
    prev: (sessionId) => requestJson(fetchFn, `${base}/api/sessions/${sessionId}/prev`),
    suggest: (sessionId, oldSummary, newSummary, signal) =>
      requestJson(
        fetchFn,
        `${base}/api/sessions/${sessionId}/suggest`,
        post({ old_summary: oldSummary, new_summary: newSummary }, signal),
      ),
    choose: (sessionId, index) =>
      requestJson(fetchFn, `${base}/api/sessions/${sessionId}/choose`, post({ index })),
    save: (sessionId, finalSummary, clientActiveMs) =>
      requestJson(
        fetchFn,
        `${base}/api/sessions/${sessionId}/save`,
        post({ final_summary: finalSummary, client_active_ms: clientActiveMs ?? null }),
      ),
    evaluate: (sessionId, payload) =>
      requestJson(fetchFn, `${base}/api/sessions/${sessionId}/evaluate`, post(payload)),
  };
}
