"""Evaluation metrics: corpus BLEU, tercom-style TER, word diff, ME/UE."""

from dataclasses import asdict, dataclass

from .bleu import BLEU_SIGNATURE, bleu_corpus
from .diffs import EditOp, EditStep, MEUECounts, apply_script, edit_count, me_ue, word_diff
from .ter import TER_SIGNATURE, ter_corpus, ter_edits, ter_sentence
from .tokenizers import tokenize_13a, tokenize_ter

__all__ = [
    "BLEU_SIGNATURE",
    "TER_SIGNATURE",
    "MetricReport",
    "bleu_corpus",
    "ter_corpus",
    "ter_sentence",
    "ter_edits",
    "word_diff",
    "apply_script",
    "edit_count",
    "me_ue",
    "EditOp",
    "EditStep",
    "MEUECounts",
    "tokenize_13a",
    "tokenize_ter",
]


@dataclass
class MetricReport:
    """One result row: a condition label with its metric values.

    ``me``/``ue`` are micro-averaged percentages, None when undefined
    (no marked or no unmarked tokens, or a condition where marking edits
    are not meaningful). Macro averages over sentences are carried along
    for inspection.
    """

    label: str
    bleu: float
    ter: float
    me: float | None = None
    ue: float | None = None
    me_macro: float | None = None
    ue_macro: float | None = None
    n_scored: int = 0
    n_failed: int = 0

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MetricReport":
        return cls(**obj)
