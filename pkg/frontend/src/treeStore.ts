// Client-side mirror of the multiverse tree, fed by treeDelta events.
// Deltas replace whole node entries, so applying a recorded log is
// idempotent and order-insensitive within one delta.

import { NodeDoc, TreeDelta, isStepLabel } from "./types.js";

export class TreeStore {
  nodes = new Map<number, NodeDoc>();
  root = 0;
  current = 0;
  rev = -1;
  needsResync = false;

  applyDelta(delta: TreeDelta): void {
    for (const node of delta.nodes) {
      this.nodes.set(node.id, node);
    }
    this.root = delta.root;
    this.current = delta.current;
    this.rev = delta.rev;
    if (!this.consistent()) {
      this.needsResync = true;
    }
  }

  reset(): void {
    this.nodes.clear();
    this.root = 0;
    this.current = 0;
    this.rev = -1;
    this.needsResync = false;
  }

  private consistent(): boolean {
    if (!this.nodes.has(this.root) || !this.nodes.has(this.current)) {
      return false;
    }
    for (const node of this.nodes.values()) {
      for (const edge of node.edges) {
        if (!this.nodes.has(edge.to)) {
          return false;
        }
      }
    }
    return true;
  }

  nodeCount(): number {
    return this.nodes.size;
  }

  edgeCount(): number {
    let n = 0;
    for (const node of this.nodes.values()) {
      n += node.edges.length;
    }
    return n;
  }

  leafCount(): number {
    let n = 0;
    for (const node of this.nodes.values()) {
      if (node.edges.length === 0) {
        n += 1;
      }
    }
    return n;
  }

  parents(): Map<number, number> {
    const out = new Map<number, number>();
    for (const node of this.nodes.values()) {
      for (const edge of node.edges) {
        out.set(edge.to, node.id);
      }
    }
    return out;
  }

  /** Node ids along root -> target, inclusive; empty when unreachable. */
  pathTo(target: number): number[] {
    const parents = this.parents();
    const path: number[] = [];
    let cur = target;
    for (;;) {
      path.push(cur);
      if (cur === this.root) {
        return path.reverse();
      }
      const parent = parents.get(cur);
      if (parent === undefined) {
        return [];
      }
      cur = parent;
    }
  }

  mockOptionCounts(): number[] {
    const counts: number[] = [];
    for (const node of this.nodes.values()) {
      const mocks = node.edges.filter((e) => !isStepLabel(e.label)).length;
      if (mocks > 0) {
        counts.push(mocks);
      }
    }
    return counts;
  }
}
