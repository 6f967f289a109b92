/**
 * Thin typed client over the service's /api/v1 routes.
 *
 * All geometry validation happens server-side; failures surface as ApiError
 * with the service's error code so the UI can show the rejection reason.
 */

import type {
  CandidateSet, EditEvent, EditResponse, LayoutGraph, LayoutListEntry,
  MetricReport, PlanDoc, ScoreResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = `HTTP ${response.status}`;
      let detail = text;
      try {
        const parsed = JSON.parse(text);
        code = parsed.error ?? code;
        detail = parsed.detail ?? JSON.stringify(parsed);
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, code, detail);
    }
    return JSON.parse(text) as T;
  }

  listProjects(): Promise<string[]> {
    return this.request('GET', '/api/v1/projects');
  }

  getPlan(project: string): Promise<PlanDoc> {
    return this.request('GET', `/api/v1/projects/${project}/plan`);
  }

  getManifest(project: string): Promise<Record<string, unknown>> {
    return this.request('GET', `/api/v1/projects/${project}`);
  }

  listCandidates(project: string, quickMetrics = true): Promise<CandidateSet[]> {
    const query = quickMetrics ? '?quick_metrics=true' : '';
    return this.request('GET', `/api/v1/projects/${project}/candidates${query}`);
  }

  candidatePngUrl(project: string, set: number, candidate: number): string {
    return `${this.baseUrl}/api/v1/projects/${project}/candidates/${set}/${candidate}/png`;
  }

  markPreferred(project: string, set: number, candidate: number): Promise<unknown> {
    return this.request(
      'POST', `/api/v1/projects/${project}/candidates/${set}/${candidate}/preferred`);
  }

  listLayouts(project: string): Promise<LayoutListEntry[]> {
    return this.request('GET', `/api/v1/projects/${project}/layouts`);
  }

  getLayout(project: string, layoutId: string): Promise<LayoutGraph> {
    return this.request('GET', `/api/v1/projects/${project}/layouts/${layoutId}`);
  }

  getMetrics(project: string, layoutId: string): Promise<MetricReport> {
    return this.request('GET', `/api/v1/projects/${project}/layouts/${layoutId}/metrics`);
  }

  applyEdit(project: string, layoutId: string, edit: EditEvent): Promise<EditResponse> {
    return this.request('POST', `/api/v1/projects/${project}/layouts/${layoutId}/edits`, edit);
  }

  recordScore(project: string, layoutId: string, critic: string,
              score: number): Promise<ScoreResponse> {
    return this.request('POST', `/api/v1/projects/${project}/layouts/${layoutId}/score`,
                        { critic, score });
  }

  runStep(project: string, kind: string,
          params: Record<string, unknown>): Promise<unknown> {
    return this.request('POST', `/api/v1/projects/${project}/steps`, { kind, params });
  }
}
