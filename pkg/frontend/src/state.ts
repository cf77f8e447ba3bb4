// View model and its pure transitions. Every field derives from an API
// payload; transitions return fresh objects so stale async responses can
// be applied last-write-wins without tearing the model.

import type {
  CandidateRow,
  GraphPayload,
  IterationReport,
  ProjectSummary,
  QueueItem,
  TaskRun,
} from './api.js';

export interface ViewModel {
  projects: ProjectSummary[];
  activeProject: string | null;
  candidates: CandidateRow[];
  queue: QueueItem[];
  graph: GraphPayload | null;
  latestReport: IterationReport | null;
  taskRun: TaskRun | null;
  notice: string | null;
  busy: boolean; // a mutation is in flight; further mutations are disabled
}

export function initialModel(): ViewModel {
  return {
    projects: [],
    activeProject: null,
    candidates: [],
    queue: [],
    graph: null,
    latestReport: null,
    taskRun: null,
    notice: null,
    busy: false,
  };
}

export function withProjects(model: ViewModel, projects: ProjectSummary[]): ViewModel {
  return { ...model, projects };
}

export function withActiveProject(model: ViewModel, projectId: string): ViewModel {
  return {
    ...initialModel(),
    projects: model.projects,
    activeProject: projectId,
  };
}

export function withCandidates(model: ViewModel, candidates: CandidateRow[]): ViewModel {
  return { ...model, candidates };
}

export function withQueue(model: ViewModel, queue: QueueItem[]): ViewModel {
  return { ...model, queue };
}

export function withGraph(model: ViewModel, graph: GraphPayload): ViewModel {
  return { ...model, graph };
}

export function withReport(model: ViewModel, report: IterationReport | null): ViewModel {
  return { ...model, latestReport: report };
}

export function withTaskRun(model: ViewModel, taskRun: TaskRun): ViewModel {
  return { ...model, taskRun };
}

export function withNotice(model: ViewModel, notice: string | null): ViewModel {
  return { ...model, notice };
}

export function withBusy(model: ViewModel, busy: boolean): ViewModel {
  return { ...model, busy };
}

export function pendingCandidates(model: ViewModel): CandidateRow[] {
  return model.candidates.filter((row) => row.status === 'pending');
}

/** A decision came back 200: move the row locally, no full reload. */
export function applyVerdict(
  model: ViewModel,
  itemId: string,
  verdict: 'approved' | 'rejected',
): ViewModel {
  return {
    ...model,
    candidates: model.candidates.map((row) =>
      row.item_id === itemId ? { ...row, status: verdict } : row,
    ),
    queue: model.queue.filter((item) => item.item_id !== itemId),
    notice: null,
  };
}
