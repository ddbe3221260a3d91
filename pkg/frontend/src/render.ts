// SVG rendering of the multiverse tree: step runs as single weighted
// edges, mock edges labeled name(args)=value, the current node filled,
// and the root-to-selection path highlighted before a slide.

import { layout, NodePos } from "./layout.js";
import { TreeStore } from "./treeStore.js";
import { isStepLabel } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderOptions {
  selected: number | null;
  onSelect: (id: number) => void;
}

function el(doc: Document, tag: string, attrs: Record<string, string>) {
  const node = doc.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  return node;
}

export function renderTree(doc: Document, svg: SVGElement, store: TreeStore,
                           opts: RenderOptions): void {
  while (svg.firstChild) {
    svg.removeChild(svg.firstChild);
  }
  const pos = layout(store);
  const highlight = new Set(
    opts.selected !== null ? store.pathTo(opts.selected) : []);

  let maxX = 0;
  let maxY = 0;
  for (const p of pos.values()) {
    maxX = Math.max(maxX, p.x);
    maxY = Math.max(maxY, p.y);
  }
  svg.setAttribute("viewBox", `-30 -30 ${maxX + 140} ${maxY + 60}`);

  for (const node of store.nodes.values()) {
    const from = pos.get(node.id);
    if (!from) continue;
    for (const edge of node.edges) {
      const to = pos.get(edge.to);
      if (!to) continue;
      const onPath = highlight.has(node.id) && highlight.has(edge.to);
      const line = el(doc, "line", {
        x1: String(from.x + 14), y1: String(from.y),
        x2: String(to.x - 14), y2: String(to.y),
        stroke: onPath ? "#e08904" : "#7c93b5",
        "stroke-width": onPath ? "3" : "1.5",
      });
      svg.appendChild(line);
      const label = isStepLabel(edge.label)
        ? (edge.label.step === 1 ? "step" : `step ×${edge.label.step}`)
        : `${edge.prim ?? "mock"}(${(edge.args ?? []).join(",")})=${edge.label.mock}`;
      const text = el(doc, "text", {
        x: String((from.x + to.x) / 2),
        y: String((from.y + to.y) / 2 - 6),
        "text-anchor": "middle",
        "font-size": "11",
        fill: isStepLabel(edge.label) ? "#5a6b80" : "#1f4d8f",
      });
      text.textContent = label;
      svg.appendChild(text);
    }
  }

  for (const node of store.nodes.values()) {
    const p = pos.get(node.id);
    if (!p) continue;
    const isCurrent = node.id === store.current;
    const isSelected = node.id === opts.selected;
    const circle = el(doc, "circle", {
      cx: String(p.x), cy: String(p.y), r: "12",
      fill: isCurrent ? "#8fc7ff" : "#f5f8fc",
      stroke: isSelected ? "#e08904" : "#41536b",
      "stroke-width": isSelected ? "3" : "1.5",
      cursor: "pointer",
      "data-node": String(node.id),
    });
    circle.addEventListener("click", () => opts.onSelect(node.id));
    svg.appendChild(circle);
    const text = el(doc, "text", {
      x: String(p.x), y: String(p.y + 4),
      "text-anchor": "middle", "font-size": "10", fill: "#2a3a50",
      "pointer-events": "none",
    });
    text.textContent = String(node.id);
    svg.appendChild(text);
  }
}
