import { describe, expect, it } from "vitest";

import {
  SKIP_REASONS,
  clearMarks,
  markAll,
  markedCount,
  marksArray,
  newItemState,
  toggleToken,
} from "../src/state.js";

const tokens = ["Einige", "wichtige", "Umweltvariablen", ",", "die"];

describe("item state", () => {
  it("starts with every word considered correct", () => {
    const state = newItemState("item-1", "src", tokens);
    expect(state.marked).toEqual([false, false, false, false, false]);
    expect(marksArray(state)).toEqual([0, 0, 0, 0, 0]);
  });

  it("keeps the marks array aligned with the tokens", () => {
    const state = toggleToken(newItemState("item-1", "src", tokens), 2);
    expect(marksArray(state)).toHaveLength(tokens.length);
    expect(marksArray(state)).toEqual([0, 0, 1, 0, 0]);
  });

  it("double toggle restores the original state", () => {
    const start = newItemState("item-1", "src", tokens);
    const once = toggleToken(start, 3);
    const twice = toggleToken(once, 3);
    expect(twice.marked).toEqual(start.marked);
  });

  it("toggling one token never changes its neighbours", () => {
    const state = toggleToken(newItemState("item-1", "src", tokens), 3);
    expect(state.marked[2]).toBe(false);
    expect(state.marked[4]).toBe(false);
  });

  it("marked set equals exactly the odd-toggled set", () => {
    let state = newItemState("item-1", "src", tokens);
    const clicks = [0, 2, 2, 4, 0, 0];
    for (const index of clicks) state = toggleToken(state, index);
    const oddToggled = [0, 4]; // 0 clicked 3x, 2 clicked 2x, 4 clicked 1x
    expect(
      state.marked.flatMap((m, i) => (m ? [i] : [])),
    ).toEqual(oddToggled);
  });

  it("mark-all and clear cover the nonsense-translation case", () => {
    const state = markAll(newItemState("item-1", "src", tokens));
    expect(markedCount(state)).toBe(tokens.length);
    expect(markedCount(clearMarks(state))).toBe(0);
  });

  it("rejects out-of-range indices", () => {
    const state = newItemState("item-1", "src", tokens);
    expect(() => toggleToken(state, 5)).toThrow(RangeError);
    expect(() => toggleToken(state, -1)).toThrow(RangeError);
  });
});

describe("skip reasons", () => {
  it("exposes exactly the four protocol reasons", () => {
    expect(SKIP_REASONS).toEqual([
      "Source Incomprehensible",
      "Source Ambiguous",
      "Missing Knowledge",
      "Other",
    ]);
  });
});
