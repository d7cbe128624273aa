"""Annotation-behavior statistics and Krippendorff's alpha.

Alpha is computed through the coincidence matrix: every multiply-coded
unit contributes each ordered pair of its values with weight 1/(m_u - 1),
observed disagreement averages the difference function over that matrix,
and expected disagreement over the value marginals. Binary OK/BAD token
labels use the nominal difference (0/1); sentence-level percent-marked
values use the interval difference (squared gap).
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .errors import DegenerateData, EmptyVector
from .records import BAD, SkipReason, TripleRecord

NOMINAL = "nominal"
INTERVAL = "interval"


def percent_marked(marks: list[int]) -> float:
    """Fraction of BAD tokens, the sentence-level quality judgment."""
    if not marks:
        raise EmptyVector("marking vector has no entries")
    return sum(1 for m in marks if m == BAD) / len(marks)


class ReliabilityMatrix:
    """units x coders table of observed values; cells may be missing."""

    def __init__(self):
        self._cells: dict = defaultdict(dict)  # unit -> {coder: value}
        self._coders: set = set()

    def add(self, unit, coder, value) -> None:
        self._cells[unit][coder] = value
        self._coders.add(coder)

    @property
    def coders(self) -> list:
        return sorted(self._coders)

    @property
    def units(self) -> list:
        return list(self._cells)

    def values_by_unit(self) -> list[list]:
        return [list(v.values()) for v in self._cells.values()]

    def restrict(self, coders: Iterable) -> "ReliabilityMatrix":
        keep = set(coders)
        out = ReliabilityMatrix()
        for unit, cells in self._cells.items():
            for coder, value in cells.items():
                if coder in keep:
                    out.add(unit, coder, value)
        return out


def _delta_nominal(a, b) -> float:
    return 0.0 if a == b else 1.0


def _delta_interval(a, b) -> float:
    return (a - b) ** 2


_DELTAS = {NOMINAL: _delta_nominal, INTERVAL: _delta_interval}


def alpha(matrix: ReliabilityMatrix, scale: str = NOMINAL) -> float:
    """Krippendorff's alpha for the given difference scale.

    Units valued by fewer than two coders are ignored. When expected
    disagreement is zero (all pairable values identical) alpha is 1.0.
    """
    delta = _DELTAS[scale]
    valued = [vals for vals in matrix.values_by_unit() if len(vals) > 1]
    n_pairable = sum(len(vals) for vals in valued)
    if n_pairable == 0:
        raise DegenerateData("no unit is valued by two or more coders")

    # coincidence counts over the value domain
    coincidence: Counter = Counter()
    for vals in valued:
        weight = 1.0 / (len(vals) - 1)
        for i, a in enumerate(vals):
            for j, b in enumerate(vals):
                if i != j:
                    coincidence[(a, b)] += weight

    marginals: Counter = Counter()
    for (a, _), count in coincidence.items():
        marginals[a] += count

    d_observed = sum(count * delta(a, b) for (a, b), count in coincidence.items())
    d_observed /= n_pairable

    d_expected = 0.0
    values = list(marginals)
    for a in values:
        for b in values:
            if a == b:
                continue
            d_expected += marginals[a] * marginals[b] * delta(a, b)
    d_expected /= n_pairable * (n_pairable - 1)

    if d_expected == 0.0:
        return 1.0
    return 1.0 - d_observed / d_expected


def pairwise_alpha(
    matrix: ReliabilityMatrix, scale: str = NOMINAL
) -> dict[tuple, float]:
    """Alpha for every coder pair over the units both coded.

    Keys are ordered pairs both ways, so the mapping reads symmetric.
    """
    out: dict[tuple, float] = {}
    for a, b in combinations(matrix.coders, 2):
        sub = matrix.restrict([a, b])
        try:
            value = alpha(sub, scale)
        except DegenerateData:
            value = math.nan
        out[(a, b)] = value
        out[(b, a)] = value
    return out


def mean_pairwise_alpha(pairwise: dict[tuple, float]) -> float | None:
    vals = [v for (a, b), v in pairwise.items() if a < b and not math.isnan(v)]
    if not vals:
        return None
    return sum(vals) / len(vals)


@dataclass
class AnnotatorBehavior:
    annotator_id: str
    n_marked_items: int
    mean_percent_marked: float
    sd_percent_marked: float
    unmarked_fraction: float
    skip_counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_skips(self) -> int:
        return sum(self.skip_counts.values())


def behavior_stats(records: Iterable[TripleRecord]) -> dict[str, AnnotatorBehavior]:
    """Per-annotator marking behavior over an annotation export.

    SD is the population standard deviation over the annotator's marked
    items. Skipped items do not enter the percent-marked statistics.
    """
    by_annotator: dict[str, list[TripleRecord]] = defaultdict(list)
    for rec in records:
        if rec.annotator_id is not None:
            by_annotator[rec.annotator_id].append(rec)

    out: dict[str, AnnotatorBehavior] = {}
    for annotator, recs in sorted(by_annotator.items()):
        fractions = [percent_marked(r.markings) for r in recs if r.markings is not None]
        skips = Counter(r.skip.value for r in recs if r.skip is not None)
        mean = sum(fractions) / len(fractions) if fractions else 0.0
        var = (
            sum((f - mean) ** 2 for f in fractions) / len(fractions)
            if fractions
            else 0.0
        )
        unmarked = (
            sum(1 for f in fractions if f == 0.0) / len(fractions) if fractions else 0.0
        )
        out[annotator] = AnnotatorBehavior(
            annotator_id=annotator,
            n_marked_items=len(fractions),
            mean_percent_marked=mean,
            sd_percent_marked=math.sqrt(var),
            unmarked_fraction=unmarked,
            skip_counts={reason.value: skips.get(reason.value, 0) for reason in SkipReason},
        )
    return out


def _item_key(record: TripleRecord) -> tuple[str, str]:
    # same underlying item across annotators shares source and hypothesis
    return (record.source, record.hypothesis)


def common_items(records: Iterable[TripleRecord]) -> tuple[list, list]:
    """Items marked (not skipped) by every annotator present in the data."""
    marked: dict[tuple, dict[str, TripleRecord]] = defaultdict(dict)
    coders: set[str] = set()
    for rec in records:
        if rec.annotator_id is None:
            continue
        coders.add(rec.annotator_id)
        if rec.markings is not None and rec.skip is None:
            marked[_item_key(rec)][rec.annotator_id] = rec
    keys = [k for k, per in marked.items() if set(per) == coders]
    return keys, sorted(coders)


def sentence_matrix(records: Iterable[TripleRecord]) -> ReliabilityMatrix:
    """Interval-scale matrix of percent-marked values over common items."""
    records = list(records)
    keys, _ = common_items(records)
    keep = set(keys)
    matrix = ReliabilityMatrix()
    for rec in records:
        if rec.annotator_id is None or rec.markings is None or rec.skip is not None:
            continue
        key = _item_key(rec)
        if key in keep:
            matrix.add(key, rec.annotator_id, percent_marked(rec.markings))
    return matrix


def token_matrix(records: Iterable[TripleRecord]) -> ReliabilityMatrix:
    """Nominal-scale matrix of per-token OK/BAD labels over common items."""
    records = list(records)
    keys, _ = common_items(records)
    keep = set(keys)
    matrix = ReliabilityMatrix()
    for rec in records:
        if rec.annotator_id is None or rec.markings is None or rec.skip is not None:
            continue
        key = _item_key(rec)
        if key not in keep:
            continue
        for idx, mark in enumerate(rec.markings):
            matrix.add((key, idx), rec.annotator_id, mark)
    return matrix


@dataclass
class AgreementReport:
    n_common_items: int
    coders: list[str]
    sentence_alpha: float | None
    token_alpha: float | None
    sentence_pairwise: dict[tuple, float]
    token_pairwise: dict[tuple, float]
    sentence_pairwise_mean: float | None
    token_pairwise_mean: float | None
    behaviors: dict[str, AnnotatorBehavior]

    def to_json_dict(self) -> dict:
        def pairs(d: dict[tuple, float]) -> list[dict]:
            return [
                {"a": a, "b": b, "alpha": (None if math.isnan(v) else v)}
                for (a, b), v in sorted(d.items())
                if a < b
            ]

        return {
            "n_common_items": self.n_common_items,
            "coders": self.coders,
            "sentence_alpha": self.sentence_alpha,
            "token_alpha": self.token_alpha,
            "sentence_pairwise": pairs(self.sentence_pairwise),
            "token_pairwise": pairs(self.token_pairwise),
            "sentence_pairwise_mean": self.sentence_pairwise_mean,
            "token_pairwise_mean": self.token_pairwise_mean,
            "behaviors": {
                a: {
                    "n_marked_items": b.n_marked_items,
                    "mean_percent_marked": b.mean_percent_marked,
                    "sd_percent_marked": b.sd_percent_marked,
                    "unmarked_fraction": b.unmarked_fraction,
                    "skip_counts": b.skip_counts,
                }
                for a, b in self.behaviors.items()
            },
        }


def agreement_report(records: Iterable[TripleRecord]) -> AgreementReport:
    """Full agreement analysis over an annotation export."""
    records = list(records)
    keys, coders = common_items(records)

    def safe_alpha(matrix: ReliabilityMatrix, scale: str) -> float | None:
        try:
            return alpha(matrix, scale)
        except DegenerateData:
            return None

    smatrix = sentence_matrix(records)
    tmatrix = token_matrix(records)
    s_pair = pairwise_alpha(smatrix, INTERVAL)
    t_pair = pairwise_alpha(tmatrix, NOMINAL)
    return AgreementReport(
        n_common_items=len(keys),
        coders=coders,
        sentence_alpha=safe_alpha(smatrix, INTERVAL),
        token_alpha=safe_alpha(tmatrix, NOMINAL),
        sentence_pairwise=s_pair,
        token_pairwise=t_pair,
        sentence_pairwise_mean=mean_pairwise_alpha(s_pair),
        token_pairwise_mean=mean_pairwise_alpha(t_pair),
        behaviors=behavior_stats(records),
    )


def render_agreement(report: AgreementReport) -> str:
    """Plain-text tables in the style of the annotation-statistics tables."""
    lines: list[str] = []
    coders = report.coders
    width = max([10] + [len(c) for c in coders]) + 2

    def row(label: str, cells: list[str]) -> str:
        return label.ljust(30) + "".join(c.rjust(width) for c in cells)

    lines.append(row("Annotator", coders))
    lines.append(
        row(
            "Percent Marked on Average",
            [f"{report.behaviors[c].mean_percent_marked:.2f}" if c in report.behaviors else "-" for c in coders],
        )
    )
    lines.append(
        row(
            "SD of Percent Marked",
            [f"{report.behaviors[c].sd_percent_marked:.2f}" if c in report.behaviors else "-" for c in coders],
        )
    )
    lines.append(
        row(
            "Unmarked Sentences",
            [f"{report.behaviors[c].unmarked_fraction:.2f}" if c in report.behaviors else "-" for c in coders],
        )
    )
    lines.append(
        row(
            "Skipped",
            [str(report.behaviors[c].n_skips) if c in report.behaviors else "-" for c in coders],
        )
    )
    lines.append("")
    lines.append(f"Common items annotated by all: {report.n_common_items}")

    for title, pair, mean, overall in (
        (
            "Pairwise alpha, percent marked (interval)",
            report.sentence_pairwise,
            report.sentence_pairwise_mean,
            report.sentence_alpha,
        ),
        (
            "Pairwise alpha, token OK/BAD (nominal)",
            report.token_pairwise,
            report.token_pairwise_mean,
            report.token_alpha,
        ),
    ):
        lines.append("")
        lines.append(title)
        lines.append(row("", coders[1:]))
        for i, a in enumerate(coders[:-1]):
            cells = []
            for b in coders[1:]:
                if (a, b) in pair and a < b:
                    v = pair[(a, b)]
                    cells.append("nan" if math.isnan(v) else f"{v:.3f}")
                else:
                    cells.append("-")
            lines.append(row(a, cells))
        mean_text = "n/a" if mean is None else f"{mean:.3f}"
        overall_text = "n/a" if overall is None else f"{overall:.3f}"
        lines.append(f"Average pairwise alpha: {mean_text}   Multi-coder alpha: {overall_text}")

    return "\n".join(lines)
