"""PE-TM data model and JSONL persistence.

A store holds triples of (source, machine translation hypothesis,
reference) plus optional per-token error markings produced by human
annotators. The hypothesis string is kept in its whitespace-tokenized
form (spaces around punctuation) so that marking indices are unambiguous:
``markings[i]`` judges ``tokenize_ws(hypothesis)[i]``, 1 meaning BAD and
0 meaning OK.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import InsufficientData

OK = 0
BAD = 1

SPLIT_POOL = "pool"
SPLIT_TEST = "test"
SPLIT_UNASSIGNED = "unassigned"

_SPLITS = (SPLIT_POOL, SPLIT_TEST, SPLIT_UNASSIGNED)


class SkipReason(str, enum.Enum):
    """The four admissible justifications for declining to annotate."""

    SOURCE_INCOMPREHENSIBLE = "Source Incomprehensible"
    SOURCE_AMBIGUOUS = "Source Ambiguous"
    MISSING_KNOWLEDGE = "Missing Knowledge"
    OTHER = "Other"


def tokenize_ws(text: str) -> list[str]:
    """Split into maximal runs of non-whitespace. Empty text gives []."""
    return text.split()


@dataclass
class TripleRecord:
    id: str
    source: str
    hypothesis: str
    reference: str
    markings: list[int] | None = None
    annotator_id: str | None = None
    skip: SkipReason | None = None
    split: str = SPLIT_UNASSIGNED

    def hypothesis_tokens(self) -> list[str]:
        return tokenize_ws(self.hypothesis)

    def is_usable(self) -> bool:
        """Usable for experiments: not skipped and carries at least one BAD mark."""
        return self.skip is None and self.markings is not None and BAD in self.markings

    def to_json_dict(self) -> dict:
        out: dict = {
            "id": self.id,
            "source": self.source,
            "hypothesis": self.hypothesis,
            "reference": self.reference,
        }
        if self.markings is not None:
            out["markings"] = list(self.markings)
        if self.annotator_id is not None:
            out["annotator_id"] = self.annotator_id
        if self.skip is not None:
            out["skip"] = self.skip.value
        if self.split != SPLIT_UNASSIGNED:
            out["split"] = self.split
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TripleRecord":
        skip = obj.get("skip")
        return cls(
            id=obj["id"],
            source=obj["source"],
            hypothesis=obj["hypothesis"],
            reference=obj["reference"],
            markings=list(obj["markings"]) if obj.get("markings") is not None else None,
            annotator_id=obj.get("annotator_id"),
            skip=SkipReason(skip) if skip is not None else None,
            split=obj.get("split", SPLIT_UNASSIGNED),
        )


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_record(record: TripleRecord) -> list[Violation]:
    """Collect every invariant violation. Never raises.

    Codes: MarkingLengthMismatch, SkipMarkingConflict, EmptyField,
    BadMarkValue, BadSplit, BadSkipReason.
    """
    violations: list[Violation] = []
    for name in ("id", "source", "hypothesis", "reference"):
        if not getattr(record, name):
            violations.append(Violation("EmptyField", f"field '{name}' is empty"))
    if record.markings is not None:
        n_tokens = len(record.hypothesis_tokens())
        if len(record.markings) != n_tokens:
            violations.append(
                Violation(
                    "MarkingLengthMismatch",
                    f"{len(record.markings)} marks for {n_tokens} hypothesis tokens",
                )
            )
        if any(m not in (OK, BAD) for m in record.markings):
            violations.append(Violation("BadMarkValue", "marks must be 0 (OK) or 1 (BAD)"))
        if record.skip is not None:
            violations.append(
                Violation("SkipMarkingConflict", "record is skipped but carries markings")
            )
    if record.skip is not None and not isinstance(record.skip, SkipReason):
        violations.append(Violation("BadSkipReason", f"unknown skip reason {record.skip!r}"))
    if record.split not in _SPLITS:
        violations.append(Violation("BadSplit", f"unknown split {record.split!r}"))
    return violations


class PETMStore:
    """Ordered collection of records with unique ids, persisted as JSONL.

    The on-disk form is one UTF-8 JSON object per line with keys in the
    fixed order id, source, hypothesis, reference, markings, annotator_id,
    skip, split; absent fields are omitted and ``split`` is omitted when
    unassigned. Saving always produces this canonical form, so
    save(load(f)) is byte-identical for files written by this class.
    """

    def __init__(self, records: Iterable[TripleRecord] = (), path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._records: list[TripleRecord] = []
        self._by_id: dict[str, TripleRecord] = {}
        for rec in records:
            self.append(rec)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[TripleRecord]:
        return iter(self._records)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    @property
    def records(self) -> list[TripleRecord]:
        return list(self._records)

    def get(self, record_id: str) -> TripleRecord:
        return self._by_id[record_id]

    def append(self, record: TripleRecord, validate: bool = True) -> None:
        if record.id in self._by_id:
            raise ValueError(f"duplicate record id {record.id!r}")
        if validate:
            violations = validate_record(record)
            if violations:
                raise ValueError(
                    f"record {record.id!r} invalid: "
                    + "; ".join(v.message for v in violations)
                )
        self._records.append(record)
        self._by_id[record.id] = record

    def usable_records(self) -> list[TripleRecord]:
        return [r for r in self._records if r.is_usable()]

    @classmethod
    def load(cls, path: str | Path, validate: bool = True) -> "PETMStore":
        store = cls(path=path)
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{line_no}: not valid JSON: {exc}") from exc
                store.append(TripleRecord.from_json_dict(obj), validate=validate)
        return store

    def save(self, path: str | Path | None = None) -> Path:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("no target path for save()")
        with open(target, "w", encoding="utf-8") as fh:
            for rec in self._records:
                fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False))
                fh.write("\n")
        self.path = target
        return target


def write_records_jsonl(records: Iterable[TripleRecord], path: str | Path) -> Path:
    """Write records in the canonical JSONL form without store validation.

    Used for pipeline candidates whose hypothesis is not filled in yet.
    """
    target = Path(path)
    with open(target, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False))
            fh.write("\n")
    return target


def split_pool(
    store: PETMStore, pool_size: int, test_size: int, seed: int
) -> tuple[list[str], list[str]]:
    """Partition usable record ids into disjoint pool and test sets.

    Usable ids are shuffled with a PRNG seeded by ``seed`` and sliced, so
    the same seed always yields the same split.
    """
    usable = [r.id for r in store.usable_records()]
    if pool_size + test_size > len(usable):
        raise InsufficientData(
            f"need {pool_size + test_size} usable records, have {len(usable)}"
        )
    rng = random.Random(seed)
    rng.shuffle(usable)
    return usable[:pool_size], usable[pool_size : pool_size + test_size]


def apply_split(
    store: PETMStore, pool_ids: Iterable[str], test_ids: Iterable[str]
) -> PETMStore:
    """Return a new store with split labels applied to the given ids."""
    pool = set(pool_ids)
    test = set(test_ids)
    overlap = pool & test
    if overlap:
        raise ValueError(f"pool and test overlap on {sorted(overlap)[:3]}...")
    out = PETMStore(path=store.path)
    for rec in store:
        if rec.id in pool:
            out.append(replace(rec, split=SPLIT_POOL))
        elif rec.id in test:
            out.append(replace(rec, split=SPLIT_TEST))
        else:
            out.append(replace(rec, split=SPLIT_UNASSIGNED))
    return out
