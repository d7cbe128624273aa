"""Annotation service: sessions, marking, skips, live correction, review.

Annotators work through assigned blocks of (source, hypothesis) items.
The trial phase hands every annotator the same shared block so agreement
can be computed; main-phase blocks are disjoint. Each item accepts exactly
one action (marks or skip) per annotator. When live correction is enabled
and a submission contains at least one BAD mark, the service retrieves
similar pool examples, renders a marked-error prompt, queries the
configured model, and returns the post-processed retranslation alongside
the stored confirmation; correction failures degrade to a warning.

All state changes append to JSONL logs under the state directory and are
replayed on startup.
"""

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .agreement import AgreementReport, agreement_report
from .errors import (
    ItemNotInSession,
    LengthMismatch,
    NoBlocksAvailable,
    NothingToReview,
    PetmError,
    SessionClosed,
)
from .gateway import Gateway, postprocess
from .prompting import PromptSpec, TaskKind, build_prompt
from .records import BAD, PETMStore, SkipReason, TripleRecord
from .retrieval import RetrievalIndex, build_index, top_k

PHASE_TRIAL = "trial"
PHASE_MAIN = "main"

DEFAULT_TRIAL_SIZE = 50
DEFAULT_BLOCK_SIZE = 500


@dataclass
class AnnotationSession:
    session_id: str
    annotator_id: str
    phase: str
    item_ids: list[str]

    def to_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "annotator_id": self.annotator_id,
            "phase": self.phase,
            "item_ids": self.item_ids,
        }


@dataclass
class Annotation:
    item_id: str
    annotator_id: str
    marks: list[int] | None = None
    skip: str | None = None


@dataclass
class Correction:
    item_id: str
    annotator_id: str
    condition: str
    text: str


def export_record_id(item_id: str, annotator_id: str) -> str:
    return f"{item_id}@{annotator_id}"


class AnnotationService:
    """Framework-free core; the HTTP layer is a thin shell around this."""

    def __init__(
        self,
        items: PETMStore,
        state_dir: str | Path,
        pool: list[TripleRecord] | None = None,
        gateway: Gateway | None = None,
        trial_size: int = DEFAULT_TRIAL_SIZE,
        block_size: int = DEFAULT_BLOCK_SIZE,
        shots: int = 5,
        live_correction: bool = True,
        condition_label: str = TaskKind.MRK.value,
    ):
        self.items = items
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.pool = pool or []
        self.gateway = gateway
        self.trial_size = trial_size
        self.block_size = block_size
        self.shots = shots
        self.live_correction = live_correction and gateway is not None and bool(self.pool)
        self.condition_label = condition_label

        self._lock = threading.Lock()
        self._sessions: dict[str, AnnotationSession] = {}
        self._block_owners: dict[int, str] = {}
        self._annotations: dict[tuple[str, str], Annotation] = {}
        self._reviews: dict[tuple[str, str], bool] = {}
        self._corrections: dict[str, Correction] = {}

        self._index: RetrievalIndex | None = (
            build_index(self.pool) if self.live_correction else None
        )
        self._replay()

    # --- persistence ----------------------------------------------------

    def _events_path(self) -> Path:
        return self.state_dir / "events.jsonl"

    def _append_event(self, event: dict) -> None:
        with open(self._events_path(), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _replay(self) -> None:
        path = self._events_path()
        if not path.exists():
            return
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event.pop("event")
            if kind == "session":
                session = AnnotationSession(**event)
                self._sessions[session.session_id] = session
                if session.phase == PHASE_MAIN:
                    self._block_owners[event_block(event)] = session.annotator_id
            elif kind == "marks":
                self._annotations[(event["annotator_id"], event["item_id"])] = Annotation(
                    item_id=event["item_id"],
                    annotator_id=event["annotator_id"],
                    marks=event["marks"],
                )
            elif kind == "skip":
                self._annotations[(event["annotator_id"], event["item_id"])] = Annotation(
                    item_id=event["item_id"],
                    annotator_id=event["annotator_id"],
                    skip=event["reason"],
                )
            elif kind == "review":
                self._reviews[(event["item_id"], event["reviewer_id"])] = event["correct"]
            elif kind == "correction":
                self._corrections[event["item_id"]] = Correction(
                    item_id=event["item_id"],
                    annotator_id=event["annotator_id"],
                    condition=event["condition"],
                    text=event["text"],
                )

    # --- sessions ---------------------------------------------------------

    def _session_key(self, annotator_id: str, phase: str) -> str:
        return f"{phase}-{annotator_id}"

    def _trial_items(self) -> list[str]:
        return [r.id for r in self.items.records[: self.trial_size]]

    def _block_items(self, block: int) -> list[str]:
        start = self.trial_size + block * self.block_size
        return [r.id for r in self.items.records[start : start + self.block_size]]

    def create_session(self, annotator_id: str, phase: str) -> AnnotationSession:
        if phase not in (PHASE_TRIAL, PHASE_MAIN):
            raise ValueError(f"unknown phase {phase!r}")
        with self._lock:
            key = self._session_key(annotator_id, phase)
            if key in self._sessions:
                return self._sessions[key]
            if phase == PHASE_TRIAL:
                item_ids = self._trial_items()
            else:
                owned = {b for b, a in self._block_owners.items() if a == annotator_id}
                if owned:
                    block = min(owned)
                else:
                    block = 0
                    while block in self._block_owners:
                        block += 1
                item_ids = self._block_items(block)
                if not item_ids:
                    raise NoBlocksAvailable(
                        f"no unassigned items left for block {block}"
                    )
                self._block_owners[block] = annotator_id
            session = AnnotationSession(
                session_id=key, annotator_id=annotator_id, phase=phase, item_ids=item_ids
            )
            self._sessions[key] = session
            event = session.to_json_dict() | {"event": "session"}
            if phase == PHASE_MAIN:
                event["block"] = block
            self._append_event(event)
            return session

    def get_session(self, session_id: str) -> AnnotationSession:
        if session_id not in self._sessions:
            raise SessionClosed(f"unknown session {session_id!r}")
        return self._sessions[session_id]

    def progress(self, session: AnnotationSession) -> dict:
        answered = 0
        skipped = 0
        for item_id in session.item_ids:
            annotation = self._annotations.get((session.annotator_id, item_id))
            if annotation is None:
                continue
            answered += 1
            if annotation.skip is not None:
                skipped += 1
        return {
            "total": len(session.item_ids),
            "answered": answered,
            "skipped": skipped,
        }

    def next_item(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        for item_id in session.item_ids:
            if (session.annotator_id, item_id) not in self._annotations:
                record = self.items.get(item_id)
                return {
                    "done": False,
                    "item_id": record.id,
                    "source": record.source,
                    "tokens": record.hypothesis_tokens(),
                    "progress": self.progress(session),
                }
        return {"done": True, "progress": self.progress(session)}

    # --- answering ----------------------------------------------------------

    def _check_item(self, session: AnnotationSession, item_id: str) -> TripleRecord:
        if item_id not in session.item_ids:
            raise ItemNotInSession(f"item {item_id!r} not in session {session.session_id!r}")
        if (session.annotator_id, item_id) in self._annotations:
            raise ItemNotInSession(f"item {item_id!r} already answered")
        return self.items.get(item_id)

    def submit_marks(self, session_id: str, item_id: str, marks: list[int]) -> dict:
        session = self.get_session(session_id)
        with self._lock:
            record = self._check_item(session, item_id)
            tokens = record.hypothesis_tokens()
            if len(marks) != len(tokens):
                raise LengthMismatch(
                    f"{len(marks)} marks for {len(tokens)} tokens"
                )
            if any(m not in (0, 1) for m in marks):
                raise LengthMismatch("marks must be 0 or 1")
            self._annotations[(session.annotator_id, item_id)] = Annotation(
                item_id=item_id, annotator_id=session.annotator_id, marks=list(marks)
            )
            self._append_event(
                {
                    "event": "marks",
                    "item_id": item_id,
                    "annotator_id": session.annotator_id,
                    "marks": list(marks),
                }
            )

        response: dict = {"stored": True}
        if BAD in marks and self.live_correction:
            try:
                correction = self._correct(record, marks)
            except PetmError as exc:
                response["warning"] = f"correction unavailable: {exc}"
            else:
                response["correction"] = correction
                with self._lock:
                    self._corrections[item_id] = Correction(
                        item_id=item_id,
                        annotator_id=session.annotator_id,
                        condition=self.condition_label,
                        text=correction,
                    )
                    self._append_event(
                        {
                            "event": "correction",
                            "item_id": item_id,
                            "annotator_id": session.annotator_id,
                            "condition": self.condition_label,
                            "text": correction,
                        }
                    )
        return response

    def _correct(self, record: TripleRecord, marks: list[int]) -> str:
        assert self._index is not None and self.gateway is not None
        by_id = {r.id: r for r in self.pool}
        scored = top_k(self._index, record.source, k=self.shots, exclude_id=record.id)
        shots = [by_id[s.record_id] for s in reversed(scored)]
        test = TripleRecord(
            id=record.id,
            source=record.source,
            hypothesis=record.hypothesis,
            reference=record.reference,
            markings=list(marks),
        )
        prompt = build_prompt(PromptSpec(TaskKind.MRK, shots, test))
        raw = self.gateway.complete(prompt)
        result = postprocess(raw, stop_markers=self.gateway.params.stop)
        return record.hypothesis if result.empty else result.text

    def skip_item(self, session_id: str, item_id: str, reason: str) -> dict:
        session = self.get_session(session_id)
        reason_value = SkipReason(reason)  # ValueError for unknown reasons
        with self._lock:
            self._check_item(session, item_id)
            self._annotations[(session.annotator_id, item_id)] = Annotation(
                item_id=item_id,
                annotator_id=session.annotator_id,
                skip=reason_value.value,
            )
            self._append_event(
                {
                    "event": "skip",
                    "item_id": item_id,
                    "annotator_id": session.annotator_id,
                    "reason": reason_value.value,
                }
            )
        return {"stored": True}

    # --- review -----------------------------------------------------------

    def submit_review(self, item_id: str, reviewer_id: str, correct: bool) -> dict:
        with self._lock:
            if item_id not in self._corrections:
                raise NothingToReview(f"item {item_id!r} has no generated correction")
            self._reviews[(item_id, reviewer_id)] = bool(correct)
            self._append_event(
                {
                    "event": "review",
                    "item_id": item_id,
                    "reviewer_id": reviewer_id,
                    "correct": bool(correct),
                }
            )
        return {"stored": True}

    def review_summary(self) -> dict:
        by_condition: dict[str, list[bool]] = {}
        for (item_id, _reviewer), correct in self._reviews.items():
            condition = self._corrections[item_id].condition
            by_condition.setdefault(condition, []).append(correct)
        all_verdicts = [v for verdicts in by_condition.values() for v in verdicts]

        def summary(verdicts: list[bool]) -> dict:
            return {
                "n": len(verdicts),
                "percent_correct": (
                    100.0 * sum(verdicts) / len(verdicts) if verdicts else None
                ),
            }

        return {
            "overall": summary(all_verdicts),
            "by_condition": {c: summary(v) for c, v in sorted(by_condition.items())},
        }

    # --- export and agreement ------------------------------------------------

    def _phase_of_item(self, item_id: str) -> str:
        trial = set(self._trial_items())
        return PHASE_TRIAL if item_id in trial else PHASE_MAIN

    def export_records(
        self, phase: str | None = None, annotator: str | None = None
    ) -> list[TripleRecord]:
        out: list[TripleRecord] = []
        for (annotator_id, item_id), annotation in sorted(self._annotations.items()):
            if annotator is not None and annotator_id != annotator:
                continue
            if phase is not None and self._phase_of_item(item_id) != phase:
                continue
            item = self.items.get(item_id)
            out.append(
                TripleRecord(
                    id=export_record_id(item_id, annotator_id),
                    source=item.source,
                    hypothesis=item.hypothesis,
                    reference=item.reference,
                    markings=annotation.marks,
                    annotator_id=annotator_id,
                    skip=SkipReason(annotation.skip) if annotation.skip else None,
                )
            )
        return out

    def export_jsonl(self, phase: str | None = None, annotator: str | None = None) -> str:
        lines = [
            json.dumps(rec.to_json_dict(), ensure_ascii=False)
            for rec in self.export_records(phase=phase, annotator=annotator)
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    def agreement(self, phase: str | None = None) -> AgreementReport:
        return agreement_report(self.export_records(phase=phase))


def event_block(event: dict) -> int:
    return int(event.get("block", 0))


# --- HTTP layer ------------------------------------------------------------------


def create_app(service: AnnotationService, ui_dir: str | Path | None = None):
    from fastapi import FastAPI, Query, Request
    from fastapi.responses import JSONResponse, PlainTextResponse
    from pydantic import BaseModel

    app = FastAPI(title="PE-TM annotation service")

    class SessionBody(BaseModel):
        annotator_id: str
        phase: str = PHASE_MAIN

    class MarksBody(BaseModel):
        session_id: str
        marks: list[int]

    class SkipBody(BaseModel):
        session_id: str
        reason: str

    class ReviewBody(BaseModel):
        reviewer_id: str
        correct: bool

    status_by_error = {
        SessionClosed: 404,
        ItemNotInSession: 409,
        LengthMismatch: 422,
        NothingToReview: 409,
        NoBlocksAvailable: 409,
    }

    @app.exception_handler(PetmError)
    async def petm_error_handler(request: Request, exc: PetmError):
        status = status_by_error.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"code": type(exc).__name__, "message": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422, content={"code": "ValidationError", "message": str(exc)}
        )

    @app.post("/api/sessions")
    def create_session(body: SessionBody):
        session = service.create_session(body.annotator_id, body.phase)
        return session.to_json_dict() | {"progress": service.progress(session)}

    @app.get("/api/sessions/{session_id}/next")
    def next_item(session_id: str):
        return service.next_item(session_id)

    @app.post("/api/items/{item_id}/marks")
    def submit_marks(item_id: str, body: MarksBody):
        return service.submit_marks(body.session_id, item_id, body.marks)

    @app.post("/api/items/{item_id}/skip")
    def skip_item(item_id: str, body: SkipBody):
        return service.skip_item(body.session_id, item_id, body.reason)

    @app.post("/api/items/{item_id}/review")
    def submit_review(item_id: str, body: ReviewBody):
        return service.submit_review(item_id, body.reviewer_id, body.correct)

    @app.get("/api/reviews/summary")
    def review_summary():
        return service.review_summary()

    @app.get("/api/agreement")
    def agreement(phase: str | None = Query(default=None)):
        return service.agreement(phase=phase).to_json_dict()

    @app.get("/api/export")
    def export(
        phase: str | None = Query(default=None),
        annotator: str | None = Query(default=None),
    ):
        return PlainTextResponse(
            service.export_jsonl(phase=phase, annotator=annotator),
            media_type="application/x-ndjson",
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
