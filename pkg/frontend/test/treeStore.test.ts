import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { TreeStore } from "../src/treeStore.js";
import { ServerDoc, TreeDelta, isStepLabel } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function loadFixture(name: string): string {
  return readFileSync(join(here, "fixtures", name), "utf-8");
}

function recordedDocs(): ServerDoc[] {
  return loadFixture("knock_deltas.jsonl")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line) as ServerDoc);
}

interface ExportedTree {
  root: number;
  current: number;
  nodes: { id: number; edges: { label: Record<string, number>; to: number }[] }[];
}

describe("replaying the recorded knock session", () => {
  it("reproduces the exported tree's node and edge counts", () => {
    const store = new TreeStore();
    for (const doc of recordedDocs()) {
      if (doc.type === "treeDelta") {
        store.applyDelta(doc);
      }
    }
    const exported = JSON.parse(loadFixture("knock_tree.json")) as ExportedTree;
    const exportedEdges = exported.nodes
      .map((n) => n.edges.length)
      .reduce((a, b) => a + b, 0);
    expect(store.nodeCount()).toBe(exported.nodes.length);
    expect(store.edgeCount()).toBe(exportedEdges);
    expect(store.root).toBe(exported.root);
    expect(store.current).toBe(exported.current);
    expect(store.needsResync).toBe(false);
  });

  it("matches the exported tree edge by edge", () => {
    const store = new TreeStore();
    for (const doc of recordedDocs()) {
      if (doc.type === "treeDelta") {
        store.applyDelta(doc);
      }
    }
    const exported = JSON.parse(loadFixture("knock_tree.json")) as ExportedTree;
    for (const node of exported.nodes) {
      const mirrored = store.nodes.get(node.id);
      expect(mirrored, `node ${node.id}`).toBeDefined();
      expect(mirrored!.edges.map((e) => [e.label, e.to]))
        .toEqual(node.edges.map((e) => [e.label, e.to]));
    }
  });

  it("is idempotent when the log replays twice", () => {
    const store = new TreeStore();
    const docs = recordedDocs();
    for (const pass of [0, 1]) {
      for (const doc of docs) {
        if (doc.type === "treeDelta") {
          store.applyDelta(doc);
        }
      }
    }
    const exported = JSON.parse(loadFixture("knock_tree.json")) as ExportedTree;
    expect(store.nodeCount()).toBe(exported.nodes.length);
  });
});

describe("delta consistency", () => {
  it("flags a delta whose edge targets an unknown node", () => {
    const store = new TreeStore();
    const gap: TreeDelta = {
      type: "treeDelta",
      root: 0,
      current: 0,
      rev: 1,
      nodes: [{ id: 0, edges: [{ label: { step: 2 }, to: 42 }] }],
    };
    store.applyDelta(gap);
    expect(store.needsResync).toBe(true);
  });

  it("computes the slide-highlight path from the root", () => {
    const store = new TreeStore();
    store.applyDelta({
      type: "treeDelta", root: 0, current: 0, rev: 1,
      nodes: [
        { id: 0, edges: [{ label: { step: 2 }, to: 1 }] },
        { id: 1, edges: [{ label: { mock: 5 }, to: 2 }, { label: { mock: 0 }, to: 3 }] },
        { id: 2, edges: [] },
        { id: 3, edges: [] },
      ],
    });
    expect(store.pathTo(2)).toEqual([0, 1, 2]);
    expect(store.pathTo(99)).toEqual([]);
    expect(store.leafCount()).toBe(2);
    expect(store.mockOptionCounts()).toEqual([2]);
  });
});

describe("initial state", () => {
  it("starts with a single root node after the first full delta", () => {
    const docs = recordedDocs();
    const first = docs[0] as TreeDelta;
    expect(first.type).toBe("treeDelta");
    const store = new TreeStore();
    store.applyDelta(first);
    expect(store.nodeCount()).toBe(1);
    expect(store.nodes.get(store.root)!.edges).toEqual([]);
  });
});
