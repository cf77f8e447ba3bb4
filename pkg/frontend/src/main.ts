// Workbench bootstrap: ties the API client, the view model and the DOM
// renderers together. Polling (1 s) keeps the report panel fresh while an
// iteration runs; mutations are disabled while one request is in flight.

import { ApiError, WorkbenchClient, type QueueItem } from './api.js';
import {
  applyVerdict,
  initialModel,
  withActiveProject,
  withBusy,
  withCandidates,
  withGraph,
  withNotice,
  withProjects,
  withQueue,
  withReport,
  type ViewModel,
} from './state.js';
import { renderOntograph } from './ontograph.js';
import { renderWorkbench, type Actions } from './views.js';

const POLL_INTERVAL_MS = 1000;

export class Workbench {
  model: ViewModel = initialModel();

  constructor(
    private readonly client: WorkbenchClient,
    private readonly root: HTMLElement,
  ) {}

  private render(): void {
    renderWorkbench(this.root, this.model, this.actions());
    const host = this.root.querySelector<HTMLElement>('#ontograph-host');
    if (host && this.model.graph) {
      renderOntograph(host, this.model.graph);
    }
  }

  private update(next: ViewModel): void {
    this.model = next;
    this.render();
  }

  private notice(error: unknown): void {
    const text =
      error instanceof ApiError ? `server: ${error.message} (${error.status})` : String(error);
    this.update(withNotice(this.model, text));
  }

  async start(): Promise<void> {
    const projects = await this.client.listProjects();
    this.update(withProjects(this.model, projects));
    if (projects.length > 0) {
      await this.selectProject(projects[0].project_id);
    }
  }

  async selectProject(projectId: string): Promise<void> {
    this.update(withActiveProject(this.model, projectId));
    await this.refreshAll();
  }

  async refreshAll(): Promise<void> {
    const projectId = this.model.activeProject;
    if (!projectId) return;
    const [candidates, queue, reports, graph] = await Promise.all([
      this.client.candidates(projectId),
      this.client.queue(projectId),
      this.client.reports(projectId),
      this.client.ontology(projectId),
    ]);
    let next = withCandidates(this.model, candidates);
    next = withQueue(next, queue);
    next = withReport(next, reports.length ? reports[reports.length - 1] : null);
    next = withGraph(next, graph);
    this.update(next);
  }

  async review(itemId: string, verdict: 'approve' | 'reject'): Promise<void> {
    const projectId = this.model.activeProject;
    if (!projectId || this.model.busy) return;
    this.update(withBusy(this.model, true));
    try {
      await this.client.decide(projectId, itemId, { action: verdict });
      const moved = applyVerdict(
        this.model,
        itemId,
        verdict === 'approve' ? 'approved' : 'rejected',
      );
      this.update(withBusy(moved, false));
    } catch (error) {
      // 404/409 are non-blocking: report and leave the view as it was
      this.update(withBusy(this.model, false));
      this.notice(error);
    }
  }

  async resolveQueueItem(item: QueueItem): Promise<void> {
    const projectId = this.model.activeProject;
    if (!projectId || this.model.busy) return;
    const resolution = defaultResolution(item);
    if (!resolution) return;
    this.update(withBusy(this.model, true));
    try {
      await this.client.decide(projectId, item.item_id, resolution);
      this.update(withBusy(this.model, false));
      await this.refreshAll();
    } catch (error) {
      this.update(withBusy(this.model, false));
      this.notice(error);
    }
  }

  async triggerIteration(): Promise<void> {
    const projectId = this.model.activeProject;
    if (!projectId || this.model.busy) return;
    this.update(withBusy(this.model, true));
    try {
      const report = await this.client.iterate(projectId);
      this.update(withBusy(withReport(this.model, report), false));
      await this.pollReportsUntilStop(projectId);
      await this.refreshAll();
    } catch (error) {
      this.update(withBusy(this.model, false));
      if (error instanceof ApiError && error.status === 409) {
        this.update(withNotice(this.model, 'iteration in progress'));
      } else {
        this.notice(error);
      }
    }
  }

  private async pollReportsUntilStop(projectId: string): Promise<void> {
    for (;;) {
      const reports = await this.client.reports(projectId);
      const latest = reports[reports.length - 1];
      this.update(withReport(this.model, latest ?? null));
      if (!latest || typeof latest.stop === 'boolean') {
        return; // the stop field is present once the iteration is evaluated
      }
      await new Promise((resolve) => setTimeout(resolve, POLL_INTERVAL_MS));
    }
  }

  async refreshGraph(): Promise<void> {
    const projectId = this.model.activeProject;
    if (!projectId) return;
    const graph = await this.client.ontology(projectId);
    this.update(withGraph(this.model, graph));
  }

  private actions(): Actions {
    return {
      review: (itemId, verdict) => void this.review(itemId, verdict),
      resolveQueueItem: (item) => void this.resolveQueueItem(item),
      triggerIteration: () => void this.triggerIteration(),
      selectProject: (projectId) => void this.selectProject(projectId),
      refreshGraph: () => void this.refreshGraph(),
    };
  }
}

function defaultResolution(item: QueueItem): Record<string, unknown> | null {
  switch (item.kind) {
    case 'ambiguity':
      return { action: 'split' };
    case 'stop':
      return { action: 'stop' };
    case 'homonymy': {
      // minimal chooser: pick among the server-supplied analyses
      const candidates =
        (item.payload.candidates as Array<{ lemma: string; pos: string }>) ?? [];
      const menu = candidates
        .map((c, index) => `${index + 1}: ${c.lemma}/${c.pos}`)
        .join('  ');
      const answer = window.prompt(`resolve «${String(item.payload.surface)}» — ${menu}`, '1');
      if (!answer) return null;
      const chosen = candidates[Number(answer) - 1];
      return chosen ? { lemma: chosen.lemma, pos: chosen.pos } : null;
    }
    default:
      return null;
  }
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get('api') ?? 'http://127.0.0.1:8741';
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');
  const workbench = new Workbench(new WorkbenchClient(baseUrl), root);
  void workbench.start();
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  boot();
}
