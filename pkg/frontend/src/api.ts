// Typed client for the workbench HTTP JSON API. The server is the single
// source of truth: every mutation goes through POST /decisions or
// POST /iterations and the client never invents domain data.

export interface ProjectSummary {
  project_id: string;
  domain: string;
  iterations: number;
  pending_decisions: number;
}

export type CandidateStatus = 'pending' | 'approved' | 'rejected';

export interface CandidateRow {
  item_id: string;
  normal_form: string;
  freq: number;
  doc_freq: number;
  tfidf: number;
  cvalue: number;
  status: CandidateStatus;
}

export interface QueueItem {
  item_id: string;
  kind: 'candidate' | 'homonymy' | 'ambiguity' | 'stop';
  payload: Record<string, unknown>;
  created_at: string;
  resolved: boolean;
}

export interface IterationReport {
  iteration: number;
  docs_processed: number;
  new_candidates: number;
  approved: number;
  concepts_total: number;
  relations_total: number;
  pending_decisions: number;
  stop: boolean;
  reason: string;
}

export interface GraphNode {
  id: string;
  label: string;
}

export interface GraphEdge {
  s: string;
  p: string;
  o: string;
}

export interface GraphPayload {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface TaskRun {
  run_id: string;
  events: Array<{ seq: number; kind: string; node: string }>;
  artifacts: Array<{ node: string; name: string; body: string }>;
  rendered: string;
}

export type Resolution = Record<string, unknown>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class WorkbenchClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.request('/projects');
  }

  candidates(projectId: string, status?: CandidateStatus): Promise<CandidateRow[]> {
    const query = status ? `?status=${status}` : '';
    return this.request(`/projects/${projectId}/candidates${query}`);
  }

  queue(projectId: string): Promise<QueueItem[]> {
    return this.request(`/projects/${projectId}/queue`);
  }

  decide(projectId: string, itemId: string, resolution: Resolution): Promise<unknown> {
    return this.post(`/projects/${projectId}/decisions`, {
      item_id: itemId,
      resolution,
    });
  }

  iterate(projectId: string): Promise<IterationReport> {
    return this.post(`/projects/${projectId}/iterations`, {});
  }

  reports(projectId: string): Promise<IterationReport[]> {
    return this.request(`/projects/${projectId}/reports`);
  }

  ontology(projectId: string): Promise<GraphPayload> {
    return this.request(`/projects/${projectId}/ontology`);
  }

  startTaskRun(
    projectId: string,
    paths: { objects: string; processes: string; tasks: string; links: string },
  ): Promise<{ run_id: string }> {
    return this.post(`/projects/${projectId}/task-runs`, paths);
  }

  taskRun(projectId: string, runId: string): Promise<TaskRun> {
    return this.request(`/projects/${projectId}/task-runs/${runId}`);
  }
}
