"""Prompt rendering for the three correction tasks.

MT prompts show (source, reference) pairs only. APE prompts add the raw
hypothesis line. MRK prompts additionally wrap every maximal run of
BAD-marked hypothesis tokens in ``<bad> ... </bad>`` tags so the model can
focus its edits. Rendering is a pure function of the spec: the same records
always produce the same bytes.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from importlib import resources

from .errors import EmptyShots, LengthMismatch, MissingMarkings
from .records import BAD, TripleRecord

BAD_OPEN = "<bad>"
BAD_CLOSE = "</bad>"

_TAG_RE = re.compile(r"</?bad>")


class TaskKind(str, enum.Enum):
    MT = "MT"
    APE = "APE"
    MRK = "MRK"


def _load_instructions() -> dict[str, str]:
    raw = resources.files("petm").joinpath("data/instructions.json").read_text("utf-8")
    return json.loads(raw)


INSTRUCTION_TEMPLATES = _load_instructions()


def instruction_for(
    task: TaskKind, source_language: str = "English", target_language: str = "German"
) -> str:
    return INSTRUCTION_TEMPLATES[task.value].format(
        source_language=source_language, target_language=target_language
    )


def insert_marks(tokens: list[str], marks: list[int]) -> str:
    """Wrap maximal runs of BAD tokens in a single tag pair each.

    Tags are separate whitespace-delimited tokens, so the output stays
    reversible by strip_marks.
    """
    if len(tokens) != len(marks):
        raise LengthMismatch(f"{len(tokens)} tokens vs {len(marks)} marks")
    out: list[str] = []
    open_run = False
    for token, mark in zip(tokens, marks):
        if mark == BAD and not open_run:
            out.append(BAD_OPEN)
            open_run = True
        elif mark != BAD and open_run:
            out.append(BAD_CLOSE)
            open_run = False
        out.append(token)
    if open_run:
        out.append(BAD_CLOSE)
    return " ".join(out)


def strip_marks(text: str) -> str:
    """Remove every ``<bad>`` / ``</bad>`` occurrence, balanced or dangling,
    and normalize whitespace to single spaces."""
    return " ".join(_TAG_RE.sub(" ", text).split())


@dataclass
class PromptSpec:
    """Everything needed to render one prompt.

    ``shots`` are rendered in list order; the caller decides ordering
    (the experiment runner puts the most similar shot last, adjacent to
    the test item).
    """

    task: TaskKind
    shots: list[TripleRecord]
    test: TripleRecord
    source_language: str = "English"
    target_language: str = "German"
    hypothesis_label: str = "Hypothesis"
    allow_zero_shot: bool = False

    def validate(self) -> None:
        if not self.shots and not self.allow_zero_shot:
            raise EmptyShots("prompt has no demonstration examples")
        if self.task is TaskKind.MRK:
            for rec in [*self.shots, self.test]:
                if rec.markings is None:
                    raise MissingMarkings(f"record {rec.id!r} has no marking vector")


def _hypothesis_line(record: TripleRecord, task: TaskKind, label: str) -> str:
    if task is TaskKind.MRK:
        marked = insert_marks(record.hypothesis_tokens(), list(record.markings or []))
        return f"{label}: {marked}"
    return f"{label}: {record.hypothesis}"


def build_prompt(spec: PromptSpec) -> str:
    """Render the full prompt text for a spec.

    Layout: instruction, blank line, one block per shot (source line,
    hypothesis line for APE/MRK, reference line), blank line between
    blocks, then the test block ending with a bare target label.
    """
    spec.validate()
    src_label = spec.source_language
    tgt_label = spec.target_language

    blocks = [instruction_for(spec.task, spec.source_language, spec.target_language)]
    for shot in spec.shots:
        lines = [f"{src_label}: {shot.source}"]
        if spec.task is not TaskKind.MT:
            lines.append(_hypothesis_line(shot, spec.task, spec.hypothesis_label))
        lines.append(f"{tgt_label}: {shot.reference}")
        blocks.append("\n".join(lines))

    test_lines = [f"{src_label}: {spec.test.source}"]
    if spec.task is not TaskKind.MT:
        test_lines.append(_hypothesis_line(spec.test, spec.task, spec.hypothesis_label))
    test_lines.append(f"{tgt_label}:")
    blocks.append("\n".join(test_lines))

    return "\n\n".join(blocks)
