/**
 * Pure annotation state: which hypothesis tokens are currently marked
 * as incorrect. All words start as correct; clicking toggles. The marks
 * array sent to the server is derived from this state and is always
 * aligned 1:1 with the token list.
 */

export const SKIP_REASONS = [
  "Source Incomprehensible",
  "Source Ambiguous",
  "Missing Knowledge",
  "Other",
] as const;

export type SkipReason = (typeof SKIP_REASONS)[number];

export interface ItemState {
  itemId: string;
  source: string;
  tokens: string[];
  marked: boolean[];
}

export function newItemState(
  itemId: string,
  source: string,
  tokens: string[],
): ItemState {
  return { itemId, source, tokens, marked: tokens.map(() => false) };
}

export function toggleToken(state: ItemState, index: number): ItemState {
  if (index < 0 || index >= state.tokens.length) {
    throw new RangeError(`token index ${index} out of range`);
  }
  const marked = state.marked.slice();
  marked[index] = !marked[index];
  return { ...state, marked };
}

/** Convenience for nonsensical translations: mark every word. */
export function markAll(state: ItemState): ItemState {
  return { ...state, marked: state.tokens.map(() => true) };
}

export function clearMarks(state: ItemState): ItemState {
  return { ...state, marked: state.tokens.map(() => false) };
}

/** 0/1 vector aligned with the tokens, 1 = marked incorrect. */
export function marksArray(state: ItemState): number[] {
  return state.marked.map((m) => (m ? 1 : 0));
}

export function markedCount(state: ItemState): number {
  return state.marked.filter(Boolean).length;
}
