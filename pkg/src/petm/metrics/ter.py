"""Translation edit rate with tercom-style block shifts.

Signature: nrefs:1|case:lc|tok:tercom|norm:no|punct:yes.

Edits are word substitutions, insertions, deletions, and block shifts at
unit cost. The shift search is greedy: among all hypothesis blocks that
literally occur in the reference (length capped at 10) and are currently
misaligned, apply the move that reduces the remaining edit distance the
most, and repeat while there is any strict reduction. Shift targets are
taken from the alignment, placing the block next to the hypothesis
position paired with the reference span's neighborhood. Candidate ranking
on ties: longer block, earlier block start, earlier target.

The alignment comes from a full dynamic program with the operation
preference match/substitution, then unpaired-reference, then
unpaired-hypothesis, matching the reference tool's backtrace.
"""

from ..errors import EmptyCorpus, EmptyReference, LengthMismatch
from .tokenizers import tokenize_ter

TER_SIGNATURE = "nrefs:1|case:lc|tok:tercom|norm:no|punct:yes"

MAX_SHIFT_SIZE = 10
MAX_SHIFT_CANDIDATES = 1000

_OP_MATCH = " "
_OP_SUB = "s"
_OP_REF_GAP = "i"  # reference word with no hypothesis partner
_OP_HYP_GAP = "d"  # hypothesis word with no reference partner


def _edit_distance(hyp: list[str], ref: list[str]) -> tuple[int, str]:
    """Minimal edit distance and its operation trace (hypothesis rows)."""
    n, m = len(hyp), len(ref)
    inf = n + m + 1
    dist = [[(inf, "?")] * (m + 1) for _ in range(n + 1)]
    dist[0][0] = (0, _OP_MATCH)
    for j in range(1, m + 1):
        dist[0][j] = (j, _OP_REF_GAP)
    for i in range(1, n + 1):
        dist[i][0] = (i, _OP_HYP_GAP)
        row = dist[i]
        prev = dist[i - 1]
        word = hyp[i - 1]
        for j in range(1, m + 1):
            if word == ref[j - 1]:
                cand = (prev[j - 1][0], _OP_MATCH)
            else:
                cand = (prev[j - 1][0] + 1, _OP_SUB)
            ref_gap = row[j - 1][0] + 1
            if ref_gap < cand[0]:
                cand = (ref_gap, _OP_REF_GAP)
            hyp_gap = prev[j][0] + 1
            if hyp_gap < cand[0]:
                cand = (hyp_gap, _OP_HYP_GAP)
            row[j] = cand

    trace = []
    i, j = n, m
    while i > 0 or j > 0:
        op = dist[i][j][1]
        trace.append(op)
        if op in (_OP_MATCH, _OP_SUB):
            i, j = i - 1, j - 1
        elif op == _OP_REF_GAP:
            j -= 1
        else:
            i -= 1
    return dist[n][m][0], "".join(reversed(trace))


def _alignment(trace: str) -> tuple[dict[int, int], list[int], list[int]]:
    """Map each reference position to its hypothesis anchor and flag errors."""
    align: dict[int, int] = {}
    ref_err: list[int] = []
    hyp_err: list[int] = []
    hi = ri = -1
    for op in trace:
        if op == _OP_MATCH:
            hi += 1
            ri += 1
            align[ri] = hi
            ref_err.append(0)
            hyp_err.append(0)
        elif op == _OP_SUB:
            hi += 1
            ri += 1
            align[ri] = hi
            ref_err.append(1)
            hyp_err.append(1)
        elif op == _OP_REF_GAP:
            ri += 1
            align[ri] = hi
            ref_err.append(1)
        else:
            hi += 1
            hyp_err.append(1)
    return align, ref_err, hyp_err


def _matching_blocks(hyp: list[str], ref: list[str]):
    """Yield (start_h, start_r, length) for every literal block match."""
    for start_h in range(len(hyp)):
        for start_r in range(len(ref)):
            if hyp[start_h] != ref[start_r]:
                continue
            length = 1
            while True:
                yield start_h, start_r, length
                if (
                    start_h + length >= len(hyp)
                    or start_r + length >= len(ref)
                    or hyp[start_h + length] != ref[start_r + length]
                    or length >= MAX_SHIFT_SIZE
                ):
                    break
                length += 1


def _apply_shift(words: list[str], start: int, length: int, target: int) -> list[str]:
    """Move words[start:start+length] so the block begins before ``target``."""
    if target < start:
        return (
            words[:target]
            + words[start : start + length]
            + words[target:start]
            + words[start + length :]
        )
    if target > start + length:
        return (
            words[:start]
            + words[start + length : target]
            + words[start : start + length]
            + words[target:]
        )
    return (
        words[:start]
        + words[start + length : length + target]
        + words[start : start + length]
        + words[length + target :]
    )


def _best_shift(
    hyp: list[str], ref: list[str], checked: int
) -> tuple[int, list[str], int]:
    pre_score, trace = _edit_distance(hyp, ref)
    align, ref_err, hyp_err = _alignment(trace)

    best = None
    for start_h, start_r, length in _matching_blocks(hyp, ref):
        if not any(hyp_err[start_h : start_h + length]):
            continue
        if not any(ref_err[start_r : start_r + length]):
            continue
        if start_h <= align[start_r] < start_h + length:
            continue

        prev_idx = -1
        for offset in range(-1, length):
            if start_r + offset == -1:
                idx = 0
            elif start_r + offset in align:
                idx = align[start_r + offset] + 1
            else:
                break
            if idx == prev_idx:
                continue
            prev_idx = idx

            shifted = _apply_shift(hyp, start_h, length, idx)
            candidate = (
                pre_score - _edit_distance(shifted, ref)[0],
                length,
                -start_h,
                -idx,
                shifted,
            )
            checked += 1
            if best is None or candidate[:4] > best[:4]:
                best = candidate
        if checked >= MAX_SHIFT_CANDIDATES:
            break

    if best is None:
        return 0, hyp, checked
    return best[0], best[4], checked


def ter_edits(hyp_tokens: list[str], ref_tokens: list[str]) -> int:
    """Total edits (shifts + remaining edit distance) for token sequences."""
    if not ref_tokens:
        return len(hyp_tokens)
    shifts = 0
    current = list(hyp_tokens)
    checked = 0
    while True:
        delta, shifted, checked = _best_shift(current, ref_tokens, checked)
        if checked >= MAX_SHIFT_CANDIDATES or delta <= 0:
            break
        shifts += 1
        current = shifted
    return shifts + _edit_distance(current, ref_tokens)[0]


def ter_sentence(hypothesis: str, reference: str) -> tuple[int, int]:
    """(edit count, reference length); TER percent is 100 * edits / length."""
    ref = tokenize_ter(reference)
    if not ref:
        raise EmptyReference("reference tokenized to nothing")
    hyp = tokenize_ter(hypothesis)
    return ter_edits(hyp, ref), len(ref)


def ter_corpus(hypotheses: list[str], references: list[str]) -> float:
    """Corpus TER percent: 100 * total edits / total reference length."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise EmptyCorpus("no segments to score")
    edits = 0
    length = 0
    for hyp, ref in zip(hypotheses, references):
        e, n = ter_sentence(hyp, ref)
        edits += e
        length += n
    return 100.0 * edits / length
