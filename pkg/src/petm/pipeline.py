"""Parallel-corpus ingestion filters.

Segment pairs pass through a rule chain: word-count bounds, language
identification, non-alphanumeric ratio, and PII detection. Length and
ratio checks apply to both sides; language identification checks the
source against the expected source language and the target against the
expected target language. A pair is dropped by the first failing rule,
so report accounting attributes each drop to exactly one reason.

All PII patterns live in this module and nowhere else.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .errors import EmptyText, PetmError
from .records import TripleRecord, tokenize_ws

DROP_TOO_SHORT = "TooShort"
DROP_TOO_LONG = "TooLong"
DROP_WRONG_LANGUAGE = "WrongLanguage"
DROP_NONALNUM = "NonAlnumRatio"
DROP_PII = "PII"


@dataclass(frozen=True)
class SegmentPair:
    source: str
    target: str


def nonalnum_ratio(text: str) -> float:
    """Share of non-alphanumeric characters among non-whitespace ones."""
    visible = [c for c in text if not c.isspace()]
    if not visible:
        raise EmptyText("no non-whitespace characters")
    return sum(1 for c in visible if not c.isalnum()) / len(visible)


# --- language identification ------------------------------------------------

_EN_MARKERS = frozenset(
    """the a an and or of to in on for with by from is are was were be been
    not this that it as at if you your can must should will would does did
    do have has had other others any all only when where which while use
    used using""".split()
)

_DE_MARKERS = frozenset(
    """der die das den dem des ein eine einen einem einer und oder nicht
    ist sind war waren sein auf für mit von zu zur zum aus bei nach über
    wenn dass sie wir ihr ihre kann können muss müssen soll wird werden
    wurde auch nur noch schon als wie andere anderen verwendet""".split()
)

_DE_CHARS = "äöüßÄÖÜ"

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


class LanguageIdProvider(Protocol):
    def identify(self, text: str) -> tuple[str, float]: ...


class StopwordLanguageId:
    """Zero-dependency en/de identifier scoring function-word overlap.

    German orthography (umlauts, eszett) counts toward the German score,
    which helps on short technical segments with few function words.
    """

    def identify(self, text: str) -> tuple[str, float]:
        if not text.strip():
            raise EmptyText("cannot identify language of empty text")
        words = [w.lower() for w in _WORD_RE.findall(text)]
        score_en = sum(1.0 for w in words if w in _EN_MARKERS)
        score_de = sum(1.0 for w in words if w in _DE_MARKERS)
        score_de += sum(0.5 for c in text if c in _DE_CHARS)
        total = score_en + score_de
        if total == 0.0:
            return "und", 0.0
        if score_de > score_en:
            return "de", score_de / total
        if score_en > score_de:
            return "en", score_en / total
        return "und", 0.5


def language_id(text: str, provider: LanguageIdProvider | None = None) -> tuple[str, float]:
    provider = provider or StopwordLanguageId()
    return provider.identify(text)


# --- PII patterns (versioned here) -------------------------------------------

_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
_URL_USERINFO_RE = re.compile(r"[A-Za-z][A-Za-z0-9+.-]*://[^\s/@]+@\S+")
_PHONE_RE = re.compile(r"(?<![\w.])\+?\d[\d ()\-/.]{5,}\d(?![\w.])")

_MIN_PHONE_DIGITS = 7


@dataclass(frozen=True)
class PiiMatch:
    kind: str
    start: int
    end: int
    text: str


def pii_scan(text: str) -> list[PiiMatch]:
    """Spans that look like e-mail addresses, URLs with credentials, or
    phone numbers (7+ digits with common separators)."""
    matches: list[PiiMatch] = []
    for match in _URL_USERINFO_RE.finditer(text):
        matches.append(PiiMatch("url_userinfo", match.start(), match.end(), match.group()))
    covered = [(m.start, m.end) for m in matches]

    def overlaps(start: int, end: int) -> bool:
        return any(start < e and end > s for s, e in covered)

    for match in _EMAIL_RE.finditer(text):
        if not overlaps(match.start(), match.end()):
            matches.append(PiiMatch("email", match.start(), match.end(), match.group()))
    for match in _PHONE_RE.finditer(text):
        digits = sum(1 for c in match.group() if c.isdigit())
        if digits >= _MIN_PHONE_DIGITS and not overlaps(match.start(), match.end()):
            matches.append(PiiMatch("phone", match.start(), match.end(), match.group()))
    return sorted(matches, key=lambda m: m.start)


# --- rules --------------------------------------------------------------------


class FilterRule(Protocol):
    def check(self, pair: SegmentPair) -> str | None:
        """Return a drop reason, or None to keep."""


@dataclass
class LengthBounds:
    min_words: int = 5
    max_words: int = 25

    def check(self, pair: SegmentPair) -> str | None:
        for side in (pair.source, pair.target):
            n = len(tokenize_ws(side))
            if n < self.min_words:
                return DROP_TOO_SHORT
            if n > self.max_words:
                return DROP_TOO_LONG
        return None


@dataclass
class WrongLanguage:
    provider: LanguageIdProvider = field(default_factory=StopwordLanguageId)
    source_lang: str = "en"
    target_lang: str = "de"
    min_confidence: float = 0.5

    def check(self, pair: SegmentPair) -> str | None:
        for text, expected in ((pair.source, self.source_lang), (pair.target, self.target_lang)):
            code, confidence = self.provider.identify(text)
            if code != expected and code != "und" and confidence >= self.min_confidence:
                return DROP_WRONG_LANGUAGE
        return None


@dataclass
class NonAlnumRatio:
    max_ratio: float = 0.20

    def check(self, pair: SegmentPair) -> str | None:
        for side in (pair.source, pair.target):
            try:
                if nonalnum_ratio(side) > self.max_ratio:
                    return DROP_NONALNUM
            except EmptyText:
                return DROP_NONALNUM
        return None


@dataclass
class PiiFilter:
    def check(self, pair: SegmentPair) -> str | None:
        if pii_scan(pair.source) or pii_scan(pair.target):
            return DROP_PII
        return None


def default_rules(provider: LanguageIdProvider | None = None) -> list[FilterRule]:
    return [
        LengthBounds(),
        WrongLanguage(provider=provider or StopwordLanguageId()),
        NonAlnumRatio(),
        PiiFilter(),
    ]


# --- pipeline -----------------------------------------------------------------


@dataclass
class FilterReport:
    input_count: int = 0
    retained_count: int = 0
    drops: Counter = field(default_factory=Counter)

    def check_identity(self) -> bool:
        return self.retained_count + sum(self.drops.values()) == self.input_count

    def to_json_dict(self) -> dict:
        return {
            "input": self.input_count,
            "retained": self.retained_count,
            "drops": dict(sorted(self.drops.items())),
        }


def run_pipeline(
    pairs: Iterable[SegmentPair], rules: list[FilterRule]
) -> tuple[list[SegmentPair], FilterReport]:
    if not rules:
        raise ValueError("rule list is empty")
    report = FilterReport()
    retained: list[SegmentPair] = []
    for pair in pairs:
        report.input_count += 1
        reason = None
        for rule in rules:
            try:
                reason = rule.check(pair)
            except PetmError as exc:
                raise type(exc)(
                    f"segment {report.input_count} ({pair.source[:40]!r}): {exc}"
                ) from exc
            if reason is not None:
                break
        if reason is None:
            retained.append(pair)
            report.retained_count += 1
        else:
            report.drops[reason] += 1
    return retained, report


def render_filter_report(report: FilterReport) -> str:
    lines = [
        f"segments in:  {report.input_count}",
        f"retained:     {report.retained_count}",
    ]
    for reason, count in sorted(report.drops.items()):
        lines.append(f"dropped {reason}: {count}")
    return "\n".join(lines)


def sample_pairs(
    pairs: list[SegmentPair], size: int, seed: int
) -> list[SegmentPair]:
    """Seeded random subset, order-preserving; all pairs when size >= len."""
    if size >= len(pairs):
        return list(pairs)
    rng = random.Random(seed)
    keep = sorted(rng.sample(range(len(pairs)), size))
    return [pairs[i] for i in keep]


# --- I/O ------------------------------------------------------------------------


def read_parallel_files(source_path: str | Path, target_path: str | Path) -> list[SegmentPair]:
    src_lines = Path(source_path).read_text(encoding="utf-8").splitlines()
    tgt_lines = Path(target_path).read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"line counts differ: {len(src_lines)} vs {len(tgt_lines)}"
        )
    return [SegmentPair(s, t) for s, t in zip(src_lines, tgt_lines)]


def read_tsv(path: str | Path) -> list[SegmentPair]:
    pairs = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise ValueError(f"{path}:{line_no}: expected source<TAB>target")
        pairs.append(SegmentPair(cols[0], cols[1]))
    return pairs


def to_candidate_records(
    pairs: Iterable[SegmentPair], id_prefix: str = "item"
) -> list[TripleRecord]:
    """PE-TM candidates: reference from the parallel target, hypothesis left
    empty until a translation pass fills it."""
    return [
        TripleRecord(
            id=f"{id_prefix}-{i:04d}",
            source=pair.source,
            hypothesis="",
            reference=pair.target,
        )
        for i, pair in enumerate(pairs)
    ]
