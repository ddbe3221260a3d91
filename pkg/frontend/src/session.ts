// Session-state tracking plus the compatibility guard: the UI never emits
// an event the server-side predicate would reject for the displayed state.

import { ClassifyDoc, FrontendEvent, SessionStateDoc } from "./types.js";

const LEGAL_WHILE_RUNNING = new Set(["pause", "breakAdd", "breakRem", "resync"]);

export class SessionController {
  state: "Running" | "Paused" = "Paused";
  classify: ClassifyDoc | null = null;
  blocked: string[] = [];
  private sink: (event: FrontendEvent) => void;

  constructor(sink: (event: FrontendEvent) => void) {
    this.sink = sink;
  }

  onSessionState(doc: SessionStateDoc): void {
    this.state = doc.state;
  }

  onClassify(doc: ClassifyDoc): void {
    this.classify = doc;
  }

  isLegal(event: FrontendEvent): boolean {
    if (this.state === "Running") {
      return LEGAL_WHILE_RUNNING.has(event.type);
    }
    return event.type !== "pause";
  }

  /** Emit the event if the compat predicate allows it; false otherwise. */
  emit(event: FrontendEvent): boolean {
    if (!this.isLegal(event)) {
      this.blocked.push(
        `${event.type} is not available while ${this.state.toLowerCase()}`);
      return false;
    }
    this.sink(event);
    return true;
  }

  atInputPrimitive(): boolean {
    return this.classify?.kind === "input-prim";
  }
}
