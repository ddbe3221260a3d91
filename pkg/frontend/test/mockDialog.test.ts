import { describe, expect, it } from "vitest";

import { describePrimitive, validateMockValue } from "../src/mockDialog.js";
import { ClassifyDoc } from "../src/types.js";

const analogRead: ClassifyDoc = {
  type: "classify",
  kind: "input-prim",
  prim: "chip_analog_read",
  args: [12],
  codomain: [0, 4095],
};

describe("mock dialog validation", () => {
  it("accepts an in-codomain value", () => {
    expect(validateMockValue(analogRead, "224")).toEqual({ ok: true, value: 224 });
  });

  it("blocks values above the codomain with a message", () => {
    const res = validateMockValue(analogRead, "5000");
    expect(res.ok).toBe(false);
    expect(res.message).toContain("[0, 4095]");
    expect(res.message).toContain("chip_analog_read(12)");
  });

  it("blocks negative values below the codomain", () => {
    expect(validateMockValue(analogRead, "-1").ok).toBe(false);
  });

  it("accepts digital booleans", () => {
    const digital: ClassifyDoc = {
      type: "classify", kind: "input-prim",
      prim: "chip_digital_read", args: [2], codomain: [0, 1],
    };
    expect(validateMockValue(digital, "1")).toEqual({ ok: true, value: 1 });
    expect(validateMockValue(digital, "2").ok).toBe(false);
  });

  it("rejects non-integers", () => {
    expect(validateMockValue(analogRead, "12.5").ok).toBe(false);
    expect(validateMockValue(analogRead, "abc").ok).toBe(false);
    expect(validateMockValue(analogRead, "").ok).toBe(false);
  });

  it("rejects when not at an input primitive", () => {
    const nonPrim: ClassifyDoc = { type: "classify", kind: "non-prim" };
    expect(validateMockValue(nonPrim, "1").ok).toBe(false);
    expect(validateMockValue(null, "1").ok).toBe(false);
  });

  it("shows the primitive with its arguments", () => {
    expect(describePrimitive(analogRead)).toBe("chip_analog_read(12)");
  });
});
