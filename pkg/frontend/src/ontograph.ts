// SVG rendering of the concept graph: one circle per concept, one line per
// relation, edge class keyed by predicate so isA/assoc/partOf render in
// visually distinct styles. Layout is a deterministic circle — plenty at
// desk scale and stable across refreshes.

import type { GraphPayload } from './api.js';

const SVG_NS = 'http://www.w3.org/2000/svg';
const SIZE = 640;
const RADIUS = 260;

function isGraphPayload(payload: unknown): payload is GraphPayload {
  if (typeof payload !== 'object' || payload === null) return false;
  const maybe = payload as Partial<GraphPayload>;
  return (
    Array.isArray(maybe.nodes) &&
    Array.isArray(maybe.edges) &&
    maybe.nodes.every((n) => typeof n?.id === 'string' && typeof n?.label === 'string') &&
    maybe.edges.every(
      (e) => typeof e?.s === 'string' && typeof e?.p === 'string' && typeof e?.o === 'string',
    )
  );
}

export function renderOntograph(container: HTMLElement, payload: unknown): void {
  container.replaceChildren();
  if (!isGraphPayload(payload)) {
    const panel = document.createElement('div');
    panel.className = 'error-panel';
    panel.textContent = 'ontograph: malformed graph payload';
    container.appendChild(panel);
    return;
  }

  const count = document.createElement('div');
  count.className = 'node-count';
  count.textContent = `${payload.nodes.length} concepts`;
  container.appendChild(count);

  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${SIZE} ${SIZE}`);
  svg.setAttribute('class', 'ontograph');
  container.appendChild(svg);

  const positions = new Map<string, { x: number; y: number }>();
  payload.nodes.forEach((node, index) => {
    const angle = (2 * Math.PI * index) / Math.max(payload.nodes.length, 1);
    positions.set(node.id, {
      x: SIZE / 2 + RADIUS * Math.cos(angle),
      y: SIZE / 2 + RADIUS * Math.sin(angle),
    });
  });

  for (const edge of payload.edges) {
    const from = positions.get(edge.s);
    const to = positions.get(edge.o);
    if (!from || !to) continue; // dangling edges are the server's problem
    const line = document.createElementNS(SVG_NS, 'line');
    line.setAttribute('x1', String(from.x));
    line.setAttribute('y1', String(from.y));
    line.setAttribute('x2', String(to.x));
    line.setAttribute('y2', String(to.y));
    line.setAttribute('class', `edge edge-${edge.p}`);
    svg.appendChild(line);
  }

  for (const node of payload.nodes) {
    const point = positions.get(node.id)!;
    const group = document.createElementNS(SVG_NS, 'g');
    group.setAttribute('class', 'node');
    const circle = document.createElementNS(SVG_NS, 'circle');
    circle.setAttribute('cx', String(point.x));
    circle.setAttribute('cy', String(point.y));
    circle.setAttribute('r', '6');
    const text = document.createElementNS(SVG_NS, 'text');
    text.setAttribute('x', String(point.x + 9));
    text.setAttribute('y', String(point.y + 4));
    text.textContent = node.label;
    group.appendChild(circle);
    group.appendChild(text);
    svg.appendChild(group);
  }
}
