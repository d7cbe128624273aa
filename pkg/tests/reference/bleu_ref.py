"""Reference BLEU used as the test oracle.

Transcribed from the widely used public scorer (mteval-13a tokenization,
corpus 4-gram BLEU with NIST exponential smoothing, brevity penalty, no
effective-order adjustment). Kept deliberately close to the original
string-keyed structure so it stays an independent code path from the
package implementation.
"""

import math
import re
from collections import Counter

NGRAM_ORDER = 4


def ref_tokenize_13a(line: str) -> str:
    norm = line
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")

    norm = " {} ".format(norm)
    norm = re.sub(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])", " \\1 ", norm)
    norm = re.sub(r"([^0-9])([\.,])", "\\1 \\2 ", norm)
    norm = re.sub(r"([\.,])([^0-9])", " \\1 \\2", norm)
    norm = re.sub(r"([0-9])(-)", "\\1 \\2 ", norm)
    norm = re.sub(r"\s+", " ", norm)
    norm = re.sub(r"^\s+", "", norm)
    norm = re.sub(r"\s+$", "", norm)
    return norm


def _extract_ngrams(line: str, min_order: int = 1, max_order: int = NGRAM_ORDER) -> Counter:
    ngrams: Counter = Counter()
    tokens = line.split()
    for n in range(min_order, max_order + 1):
        for i in range(0, len(tokens) - n + 1):
            ngrams[" ".join(tokens[i : i + n])] += 1
    return ngrams


def _my_log(num: float) -> float:
    if num == 0.0:
        return -9999999999
    return math.log(num)


def ref_corpus_bleu(hypotheses: list[str], references: list[str]) -> float:
    """Corpus BLEU, 0..100, signature nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp."""
    assert len(hypotheses) == len(references)

    sys_len = 0
    ref_len = 0
    correct = [0 for _ in range(NGRAM_ORDER)]
    total = [0 for _ in range(NGRAM_ORDER)]

    for hyp_line, ref_line in zip(hypotheses, references):
        output = ref_tokenize_13a(hyp_line.rstrip())
        ref = ref_tokenize_13a(ref_line.rstrip())

        sys_len += len(output.split())
        ref_len += len(ref.split())

        ref_ngrams = _extract_ngrams(ref)
        sys_ngrams = _extract_ngrams(output)
        for ngram in sys_ngrams.keys():
            n = len(ngram.split())
            correct[n - 1] += min(sys_ngrams[ngram], ref_ngrams.get(ngram, 0))
            total[n - 1] += sys_ngrams[ngram]

    precisions = [0.0 for _ in range(NGRAM_ORDER)]
    smooth_mteval = 1.0
    for n in range(1, NGRAM_ORDER + 1):
        if total[n - 1] == 0:
            break
        if correct[n - 1] == 0:
            smooth_mteval *= 2
            precisions[n - 1] = 100.0 / (smooth_mteval * total[n - 1])
        else:
            precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1]

    brevity_penalty = 1.0
    if sys_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0

    return brevity_penalty * math.exp(
        sum(map(_my_log, precisions[:NGRAM_ORDER])) / NGRAM_ORDER
    )
