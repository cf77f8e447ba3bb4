// DOM rendering for the workbench panels. Pure render-from-model into a
// container; user intents come back through the Actions callbacks.

import type { CandidateRow, QueueItem } from './api.js';
import type { ViewModel } from './state.js';

export interface Actions {
  review(itemId: string, verdict: 'approve' | 'reject'): void;
  resolveQueueItem(item: QueueItem): void;
  triggerIteration(): void;
  selectProject(projectId: string): void;
  refreshGraph(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function candidateTable(
  title: string,
  rows: CandidateRow[],
  actions: Actions,
  model: ViewModel,
  withButtons: boolean,
): HTMLElement {
  const section = el('section', `candidates-${title}`);
  section.appendChild(el('h3', undefined, `${title} (${rows.length})`));
  const table = el('table', 'candidate-table');
  const head = el('tr');
  for (const column of ['term', 'freq', 'df', 'tf-idf', 'termhood', '']) {
    head.appendChild(el('th', undefined, column));
  }
  table.appendChild(head);
  for (const row of rows) {
    const tr = el('tr', 'candidate-row');
    tr.dataset.itemId = row.item_id;
    tr.appendChild(el('td', 'term', row.normal_form));
    tr.appendChild(el('td', undefined, String(row.freq)));
    tr.appendChild(el('td', undefined, String(row.doc_freq)));
    tr.appendChild(el('td', undefined, row.tfidf.toFixed(3)));
    tr.appendChild(el('td', undefined, row.cvalue.toFixed(3)));
    const cell = el('td');
    if (withButtons) {
      for (const verdict of ['approve', 'reject'] as const) {
        const button = el('button', `btn-${verdict}`, verdict);
        button.disabled = model.busy;
        button.addEventListener('click', () => actions.review(row.item_id, verdict));
        cell.appendChild(button);
      }
    }
    tr.appendChild(cell);
    table.appendChild(tr);
  }
  section.appendChild(table);
  return section;
}

export function renderWorkbench(
  root: HTMLElement,
  model: ViewModel,
  actions: Actions,
): void {
  root.replaceChildren();

  const header = el('header');
  const projectPicker = el('select', 'project-picker');
  for (const project of model.projects) {
    const option = el('option', undefined, `${project.project_id} — ${project.domain}`);
    option.value = project.project_id;
    option.selected = project.project_id === model.activeProject;
    projectPicker.appendChild(option);
  }
  projectPicker.addEventListener('change', () =>
    actions.selectProject(projectPicker.value),
  );
  header.appendChild(projectPicker);

  const iterate = el('button', 'btn-iterate', 'run iteration');
  iterate.disabled = model.busy || model.activeProject === null;
  iterate.addEventListener('click', () => actions.triggerIteration());
  header.appendChild(iterate);

  const refresh = el('button', 'btn-refresh-graph', 'refresh ontograph');
  refresh.disabled = model.activeProject === null;
  refresh.addEventListener('click', () => actions.refreshGraph());
  header.appendChild(refresh);
  root.appendChild(header);

  if (model.notice) {
    root.appendChild(el('div', 'notice', model.notice));
  }

  if (model.latestReport) {
    const report = model.latestReport;
    const panel = el('section', 'report-panel');
    panel.appendChild(el('h3', undefined, `iteration ${report.iteration}`));
    const facts: Array<[string, string | number]> = [
      ['docs', report.docs_processed],
      ['new candidates', report.new_candidates],
      ['approved', report.approved],
      ['concepts', report.concepts_total],
      ['relations', report.relations_total],
      ['pending', report.pending_decisions],
      ['stop', report.stop ? report.reason : 'running'],
    ];
    for (const [name, value] of facts) {
      panel.appendChild(el('div', `report-${name.replace(/ /g, '-')}`, `${name}: ${value}`));
    }
    root.appendChild(panel);
  }

  const byStatus = (status: CandidateRow['status']) =>
    model.candidates.filter((row) => row.status === status);
  root.appendChild(candidateTable('pending', byStatus('pending'), actions, model, true));
  root.appendChild(candidateTable('approved', byStatus('approved'), actions, model, false));
  root.appendChild(candidateTable('rejected', byStatus('rejected'), actions, model, false));

  const queue = el('section', 'queue-panel');
  queue.appendChild(el('h3', undefined, `queue (${model.queue.length})`));
  for (const item of model.queue) {
    if (item.kind === 'candidate') continue; // shown in the pending table
    const row = el('div', `queue-item queue-${item.kind}`);
    row.dataset.itemId = item.item_id;
    row.appendChild(el('span', undefined, describeQueueItem(item)));
    const resolve = el('button', 'btn-resolve', 'resolve');
    resolve.disabled = model.busy;
    resolve.addEventListener('click', () => actions.resolveQueueItem(item));
    row.appendChild(resolve);
    queue.appendChild(row);
  }
  root.appendChild(queue);

  const graphHost = el('section', 'graph-panel');
  graphHost.id = 'ontograph-host';
  root.appendChild(graphHost);

  if (model.taskRun) {
    const tracePanel = el('section', 'trace-panel');
    tracePanel.appendChild(el('h3', undefined, `run ${model.taskRun.run_id}`));
    // the server-rendered indentation is authoritative; show it verbatim
    const pre = el('pre', 'trace-text', model.taskRun.rendered);
    tracePanel.appendChild(pre);
    root.appendChild(tracePanel);
  }
}

export function describeQueueItem(item: QueueItem): string {
  switch (item.kind) {
    case 'homonymy':
      return `homonymy: «${String(item.payload.surface ?? '?')}» doc ${String(
        item.payload.doc_id ?? '?',
      )}`;
    case 'ambiguity':
      return `ambiguity: «${String(item.payload.text ?? '?')}» splits into ${String(
        (item.payload.group_a as string[] | undefined)?.join(', ') ?? '?',
      )} | ${String((item.payload.group_b as string[] | undefined)?.join(', ') ?? '?')}`;
    case 'stop':
      return 'stop the build loop';
    default:
      return item.item_id;
  }
}
