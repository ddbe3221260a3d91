// Toolbar actions, each mapping one-to-one onto a frontend event and all
// funnelled through the session guard.

import { SessionController } from "./session.js";
import { FrontendEvent, SuggestBounds } from "./types.js";

export const DEFAULT_BOUNDS: SuggestBounds = {
  maxIterations: 64,
  maxSyms: 16,
  maxInstr: 10000,
};

export class Controls {
  constructor(private session: SessionController) {}

  step(): boolean {
    return this.session.emit({ type: "step" });
  }

  pause(): boolean {
    return this.session.emit({ type: "pause" });
  }

  play(): boolean {
    return this.session.emit({ type: "play" });
  }

  restart(): boolean {
    // keeps the multiverse tree intact, jumps back to the root
    return this.session.emit({ type: "reset" });
  }

  suggest(bounds: Partial<SuggestBounds> = {}): boolean {
    return this.session.emit({
      type: "suggest",
      bounds: { ...DEFAULT_BOUNDS, ...bounds },
    });
  }

  slide(nodeId: number | null): boolean {
    if (nodeId === null) {
      return false;
    }
    return this.session.emit({ type: "slide", nodeId });
  }

  mock(value: number): boolean {
    return this.session.emit({ type: "mock", value });
  }

  breakAdd(id: string): boolean {
    return this.session.emit({ type: "breakAdd", id });
  }

  breakRem(id: string): boolean {
    return this.session.emit({ type: "breakRem", id });
  }

  upload(watText: string): boolean {
    return this.session.emit({ type: "upload", watText });
  }
}

export function eventsOf(run: (c: Controls) => void): FrontendEvent[] {
  const out: FrontendEvent[] = [];
  const session = new SessionController((e) => out.push(e));
  run(new Controls(session));
  return out;
}
