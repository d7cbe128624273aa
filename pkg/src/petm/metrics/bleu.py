"""Corpus BLEU with the fixed signature nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp.

Sufficient statistics are accumulated per segment pair and scored once at
corpus level: clipped n-gram matches up to order 4, brevity penalty from
total lengths, and NIST exponential smoothing for orders without a single
match (the n-th zero order scores 1/2^n of a single match).
"""

import math
from collections import Counter
from dataclasses import dataclass, field

from ..errors import EmptyCorpus, LengthMismatch
from .tokenizers import tokenize_13a

NGRAM_ORDER = 4

BLEU_SIGNATURE = "nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp"


@dataclass
class BleuStats:
    sys_len: int = 0
    ref_len: int = 0
    correct: list[int] = field(default_factory=lambda: [0] * NGRAM_ORDER)
    total: list[int] = field(default_factory=lambda: [0] * NGRAM_ORDER)

    def update(self, other: "BleuStats") -> None:
        self.sys_len += other.sys_len
        self.ref_len += other.ref_len
        for n in range(NGRAM_ORDER):
            self.correct[n] += other.correct[n]
            self.total[n] += other.total[n]


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def pair_stats(hypothesis: str, reference: str) -> BleuStats:
    hyp = tokenize_13a(hypothesis)
    ref = tokenize_13a(reference)
    stats = BleuStats(sys_len=len(hyp), ref_len=len(ref))
    for n in range(1, NGRAM_ORDER + 1):
        hyp_grams = _ngrams(hyp, n)
        if not hyp_grams:
            continue
        ref_grams = _ngrams(ref, n)
        stats.total[n - 1] = sum(hyp_grams.values())
        stats.correct[n - 1] = sum(
            min(count, ref_grams[gram]) for gram, count in hyp_grams.items()
        )
    return stats


def score_from_stats(stats: BleuStats) -> float:
    precisions = [0.0] * NGRAM_ORDER
    smoothing = 1.0
    for n in range(NGRAM_ORDER):
        if stats.total[n] == 0:
            break
        if stats.correct[n] == 0:
            smoothing *= 2.0
            precisions[n] = 100.0 / (smoothing * stats.total[n])
        else:
            precisions[n] = 100.0 * stats.correct[n] / stats.total[n]

    if stats.sys_len < stats.ref_len:
        bp = math.exp(1 - stats.ref_len / stats.sys_len) if stats.sys_len > 0 else 0.0
    else:
        bp = 1.0

    # nth root of the product rather than exp of mean logs: identical
    # corpora then score exactly 100.0
    product = 1.0
    for p in precisions:
        product *= p
    return bp * product ** (1.0 / NGRAM_ORDER)


def bleu_corpus(hypotheses: list[str], references: list[str]) -> float:
    """Corpus-level BLEU in [0, 100]."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise EmptyCorpus("no segments to score")
    stats = BleuStats()
    for hyp, ref in zip(hypotheses, references):
        stats.update(pair_stats(hyp, ref))
    return score_from_stats(stats)
