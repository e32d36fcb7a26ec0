import { describe, expect, it } from "vitest";

import { verdictForKey } from "./keyboard.js";

describe("verdictForKey", () => {
  it("maps m, n, u to verdicts", () => {
    expect(verdictForKey("m")).toBe("Match");
    expect(verdictForKey("n")).toBe("NonMatch");
    expect(verdictForKey("u")).toBe("Unsure");
  });

  it("is case-insensitive", () => {
    expect(verdictForKey("M")).toBe("Match");
    expect(verdictForKey("N")).toBe("NonMatch");
  });

  it("ignores unbound keys", () => {
    expect(verdictForKey("x")).toBeNull();
    expect(verdictForKey("Enter")).toBeNull();
  });

  it("ignores keystrokes while typing in form fields", () => {
    expect(verdictForKey("m", { tagName: "INPUT" })).toBeNull();
    expect(verdictForKey("m", { tagName: "textarea" })).toBeNull();
    expect(verdictForKey("m", { tagName: "BODY" })).toBe("Match");
  });
});
