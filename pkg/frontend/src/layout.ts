// Left-to-right tidy layout: x grows with tree depth, leaves get distinct
// rows and inner nodes sit at the mean of their children.

import { TreeStore } from "./treeStore.js";

export interface NodePos {
  x: number;
  y: number;
}

export const X_GAP = 110;
export const Y_GAP = 48;

export function layout(store: TreeStore): Map<number, NodePos> {
  const pos = new Map<number, NodePos>();
  let nextRow = 0;

  const place = (id: number, depth: number): number => {
    const node = store.nodes.get(id);
    if (!node) {
      return nextRow;
    }
    if (node.edges.length === 0) {
      const row = nextRow++;
      pos.set(id, { x: depth * X_GAP, y: row * Y_GAP });
      return row;
    }
    const rows = node.edges.map((e) => place(e.to, depth + 1));
    const row = rows.reduce((a, b) => a + b, 0) / rows.length;
    pos.set(id, { x: depth * X_GAP, y: row * Y_GAP });
    return row;
  };

  place(store.root, 0);
  return pos;
}
