// The mock pop-up: shows which primitive (and arguments) is being mocked
// and refuses values outside its codomain before anything reaches the wire.

import { ClassifyDoc, FrontendEvent } from "./types.js";

export interface MockValidation {
  ok: boolean;
  value?: number;
  message?: string;
}

export function describePrimitive(classify: ClassifyDoc): string {
  const args = (classify.args ?? []).join(", ");
  return `${classify.prim ?? "?"}(${args})`;
}

export function validateMockValue(classify: ClassifyDoc | null,
                                  raw: string): MockValidation {
  if (!classify || classify.kind !== "input-prim" || !classify.codomain) {
    return { ok: false, message: "not paused at an input primitive" };
  }
  const trimmed = raw.trim();
  if (!/^-?\d+$/.test(trimmed)) {
    return { ok: false, message: `"${raw}" is not an integer` };
  }
  const value = Number(trimmed);
  const [lo, hi] = classify.codomain;
  if (value < lo || value > hi) {
    return {
      ok: false,
      message: `${value} is outside the codomain [${lo}, ${hi}] of `
        + describePrimitive(classify),
    };
  }
  return { ok: true, value };
}

export function mockEvent(value: number): FrontendEvent {
  return { type: "mock", value };
}
