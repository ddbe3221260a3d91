// Wire schemas shared with the debugger backend.

export type EdgeLabel = { step: number } | { mock: number };

export interface EdgeDoc {
  label: EdgeLabel;
  to: number;
  prim?: string;
  args?: number[];
}

export interface NodeDoc {
  id: number;
  edges: EdgeDoc[];
}

export interface TreeDelta {
  type: "treeDelta";
  root: number;
  current: number;
  nodes: NodeDoc[];
  rev: number;
}

export interface SessionStateDoc {
  type: "sessionState";
  state: "Running" | "Paused";
}

export interface SourceHighlightDoc {
  type: "sourceHighlight";
  func: number;
  instr: number;
}

export interface ClassifyDoc {
  type: "classify";
  kind: string; // non-prim | input-prim | output-prim | terminated
  prim?: string;
  args?: number[];
  codomain?: [number, number];
}

export interface DiagnosticsDoc {
  type: "diagnostics";
  message: string;
}

export type ServerDoc =
  | TreeDelta
  | SessionStateDoc
  | SourceHighlightDoc
  | ClassifyDoc
  | DiagnosticsDoc;

export interface SuggestBounds {
  maxIterations: number;
  maxSyms: number;
  maxInstr: number;
}

export type FrontendEvent =
  | { type: "step" }
  | { type: "pause" }
  | { type: "play" }
  | { type: "mock"; value: number }
  | { type: "slide"; nodeId: number }
  | { type: "suggest"; bounds: SuggestBounds }
  | { type: "reset" }
  | { type: "upload"; watText: string }
  | { type: "breakAdd"; id: string }
  | { type: "breakRem"; id: string }
  | { type: "resync" };

export function isStepLabel(label: EdgeLabel): label is { step: number } {
  return "step" in label;
}
