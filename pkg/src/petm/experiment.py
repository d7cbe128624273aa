"""End-to-end experiment runner for the MT / APE / MRK conditions.

For every test item the runner retrieves the most similar pool examples
by source-side cosine, renders the task prompt, queries the gateway, and
post-processes the response. Scoring produces one report row per
condition plus the "Original Hyps" baseline computed from the stored
hypotheses, so reports stay comparable in structure across runs.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyOutputSet, PetmError
from .gateway import (
    ChatCompletionsProvider,
    Gateway,
    GenerationParams,
    PlainCompletionsProvider,
    RequestLog,
    ResponseCache,
    make_mock,
    postprocess,
    prompt_digest,
)
from .metrics import (
    BLEU_SIGNATURE,
    TER_SIGNATURE,
    MetricReport,
    MEUECounts,
    bleu_corpus,
    me_ue,
    ter_corpus,
)
from .prompting import PromptSpec, TaskKind, build_prompt
from .records import PETMStore, SPLIT_POOL, SPLIT_TEST, TripleRecord, apply_split, split_pool, tokenize_ws
from .retrieval import DEFAULT_K, RetrievalIndex, build_index, top_k

BASELINE_LABEL = "Original Hyps"

SHOT_ORDER_SIMILAR_LAST = "most-similar-last"
SHOT_ORDER_SIMILAR_FIRST = "most-similar-first"

CONFIG_KEYS = {
    "store": "path to the PE-TM JSONL store",
    "output_dir": "directory for outputs, report, cache, and logs",
    "tasks": "list of conditions to run, subset of [MT, APE, MRK]",
    "shots": "in-context examples per prompt (k)",
    "pool_size": "pool split size; omit to reuse split labels in the store",
    "test_size": "test split size; omit to reuse split labels in the store",
    "seed": "PRNG seed for splitting",
    "fixed_shots": "use the first k pool records for every item",
    "shot_order": "most-similar-last or most-similar-first",
    "provider": "mock-echo | mock-reference | mock-recorded | chat | completion",
    "recorded_path": "response fixture for the recorded mock",
    "endpoint": "remote provider URL",
    "model": "model name sent to remote providers",
    "temperature": "sampling temperature (0 for replication)",
    "max_tokens": "response token cap",
    "concurrency": "max in-flight requests",
    "embedding_endpoint": "remote embeddings URL; omit for built-in lexical",
    "embedding_model": "remote embeddings model name",
}


@dataclass
class ExperimentConfig:
    store: Path
    output_dir: Path
    tasks: list[TaskKind] = field(
        default_factory=lambda: [TaskKind.MT, TaskKind.APE, TaskKind.MRK]
    )
    shots: int = DEFAULT_K
    pool_size: int | None = None
    test_size: int | None = None
    seed: int = 0
    fixed_shots: bool = False
    shot_order: str = SHOT_ORDER_SIMILAR_LAST
    provider: str = "mock-echo"
    recorded_path: Path | None = None
    endpoint: str | None = None
    model: str = "mock"
    temperature: float = 0.0
    max_tokens: int | None = 512
    concurrency: int = 4
    embedding_endpoint: str | None = None
    embedding_model: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = dict(obj)
        unknown = set(known) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "tasks" in known:
            known["tasks"] = [TaskKind(t.upper()) for t in known["tasks"]]
        for key in ("store", "output_dir", "recorded_path"):
            if known.get(key) is not None:
                known[key] = Path(known[key])
        return cls(**known)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ItemOutput:
    item_id: str
    prompt_digest: str
    raw: str | None
    output: str | None
    failed: bool = False
    empty: bool = False
    error: str | None = None

    def to_json_dict(self) -> dict:
        out = {
            "item_id": self.item_id,
            "prompt_digest": self.prompt_digest,
            "raw": self.raw,
            "output": self.output,
            "failed": self.failed,
            "empty": self.empty,
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ItemOutput":
        return cls(
            item_id=obj["item_id"],
            prompt_digest=obj["prompt_digest"],
            raw=obj.get("raw"),
            output=obj.get("output"),
            failed=obj.get("failed", False),
            empty=obj.get("empty", False),
            error=obj.get("error"),
        )


def select_splits(
    store: PETMStore, config: ExperimentConfig
) -> tuple[list[TripleRecord], list[TripleRecord]]:
    """Pool and test records, splitting now or reusing stored labels."""
    if config.pool_size is not None and config.test_size is not None:
        pool_ids, test_ids = split_pool(
            store, config.pool_size, config.test_size, config.seed
        )
        labeled = apply_split(store, pool_ids, test_ids)
        pool = [labeled.get(i) for i in pool_ids]
        test = [labeled.get(i) for i in test_ids]
        return pool, test
    pool = [r for r in store if r.split == SPLIT_POOL]
    test = [r for r in store if r.split == SPLIT_TEST]
    if not pool or not test:
        raise PetmError(
            "store has no split labels; pass pool_size and test_size to split now"
        )
    return pool, test


def pick_shots(
    record: TripleRecord,
    pool: list[TripleRecord],
    index: RetrievalIndex,
    config: ExperimentConfig,
) -> list[TripleRecord]:
    by_id = {r.id: r for r in pool}
    if config.fixed_shots:
        return pool[: config.shots]
    scored = top_k(index, record.source, k=config.shots, exclude_id=record.id)
    shots = [by_id[s.record_id] for s in scored]
    if config.shot_order == SHOT_ORDER_SIMILAR_LAST:
        shots.reverse()
    return shots


def run_condition(
    task: TaskKind,
    test_records: list[TripleRecord],
    pool: list[TripleRecord],
    index: RetrievalIndex,
    gateway: Gateway,
    config: ExperimentConfig,
    output_path: Path | None = None,
) -> list[ItemOutput]:
    """Generate and post-process outputs for every test item of one task.

    Per-item failures are recorded, not raised; entries are appended to
    ``output_path`` as they complete, in item order.
    """

    def one(record: TripleRecord) -> ItemOutput:
        shots = pick_shots(record, pool, index, config)
        prompt = build_prompt(PromptSpec(task, shots, record))
        digest = prompt_digest(prompt)
        try:
            raw = gateway.complete(prompt)
        except PetmError as exc:
            return ItemOutput(
                item_id=record.id, prompt_digest=digest, raw=None, output=None,
                failed=True, error=str(exc),
            )
        result = postprocess(raw, stop_markers=gateway.params.stop)
        output = record.hypothesis if result.empty else result.text
        return ItemOutput(
            item_id=record.id, prompt_digest=digest, raw=raw, output=output,
            empty=result.empty,
        )

    handle = open(output_path, "w", encoding="utf-8") if output_path else None
    outputs: list[ItemOutput] = []
    try:
        with ThreadPoolExecutor(max_workers=max(1, gateway.concurrency)) as pool_exec:
            futures = [pool_exec.submit(one, record) for record in test_records]
            for future in futures:
                entry = future.result()
                outputs.append(entry)
                if handle:
                    handle.write(json.dumps(entry.to_json_dict(), ensure_ascii=False) + "\n")
                    handle.flush()
    finally:
        if handle:
            handle.close()
    return outputs


def score_condition(
    outputs: list[ItemOutput],
    store: PETMStore,
    label: str,
    with_marking_edits: bool = True,
) -> tuple[MetricReport, list[dict]]:
    """Metric row plus per-item marking-edit details.

    Failed items are excluded from every denominator and counted in the
    row. ME/UE are micro-averaged over items with markings; the macro
    (per-sentence mean) comes along for inspection.
    """
    scored = [o for o in outputs if not o.failed and o.output is not None]
    if not scored:
        raise EmptyOutputSet("no successfully generated outputs to score")

    hyps = [o.output for o in scored]
    refs = [store.get(o.item_id).reference for o in scored]
    bleu = bleu_corpus(hyps, refs)
    ter = ter_corpus(hyps, refs)

    per_item: list[dict] = []
    totals = MEUECounts(0, 0, 0, 0)
    me_values: list[float] = []
    ue_values: list[float] = []
    if with_marking_edits:
        for out in scored:
            record = store.get(out.item_id)
            if record.markings is None:
                continue
            counts = me_ue(
                record.hypothesis_tokens(), record.markings, tokenize_ws(out.output)
            )
            totals = totals + counts
            entry = {
                "item_id": out.item_id,
                "me": counts.me_percent,
                "ue": counts.ue_percent,
            }
            per_item.append(entry)
            if counts.me_percent is not None:
                me_values.append(counts.me_percent)
            if counts.ue_percent is not None:
                ue_values.append(counts.ue_percent)

    report = MetricReport(
        label=label,
        bleu=bleu,
        ter=ter,
        me=totals.me_percent if with_marking_edits else None,
        ue=totals.ue_percent if with_marking_edits else None,
        me_macro=(sum(me_values) / len(me_values)) if me_values else None,
        ue_macro=(sum(ue_values) / len(ue_values)) if ue_values else None,
        n_scored=len(scored),
        n_failed=len(outputs) - len(scored),
    )
    return report, per_item


def baseline_row(test_records: list[TripleRecord]) -> MetricReport:
    """BLEU/TER of the stored hypotheses; marking edits are not applicable."""
    hyps = [r.hypothesis for r in test_records]
    refs = [r.reference for r in test_records]
    return MetricReport(
        label=BASELINE_LABEL,
        bleu=bleu_corpus(hyps, refs),
        ter=ter_corpus(hyps, refs),
        n_scored=len(test_records),
    )


def _cell(value: float | None) -> str:
    return "N.A." if value is None else f"{value:.2f}"


def render_report(rows: list[MetricReport]) -> str:
    """Aligned plain-text table with the metric signatures underneath."""
    if not rows:
        raise ValueError("no rows to render")
    label_width = max(len(BASELINE_LABEL), max(len(r.label) for r in rows)) + 2
    header = "Condition".ljust(label_width) + "".join(
        h.rjust(9) for h in ("BLEU", "TER", "ME", "UE")
    )
    lines = [header]
    for row in rows:
        lines.append(
            row.label.ljust(label_width)
            + "".join(_cell(v).rjust(9) for v in (row.bleu, row.ter, row.me, row.ue))
        )
    lines.append("")
    lines.append(f"BLEU signature: {BLEU_SIGNATURE}")
    lines.append(f"TER signature:  {TER_SIGNATURE}")
    return "\n".join(lines) + "\n"


def report_json(rows: list[MetricReport], config: ExperimentConfig) -> str:
    payload = {
        "rows": [r.to_json_dict() for r in rows],
        "bleu_signature": BLEU_SIGNATURE,
        "ter_signature": TER_SIGNATURE,
        "shots": config.shots,
        "seed": config.seed,
        "tasks": [t.value for t in config.tasks],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def rows_from_report_json(text: str) -> list[MetricReport]:
    payload = json.loads(text)
    return [MetricReport.from_json_dict(obj) for obj in payload["rows"]]


def build_gateway(config: ExperimentConfig, store: PETMStore) -> Gateway:
    params = GenerationParams(
        model=config.model,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    if config.provider == "mock-echo":
        provider = make_mock("echo-hypothesis")
    elif config.provider == "mock-reference":
        provider = make_mock("return-reference", records=store.records)
    elif config.provider == "mock-recorded":
        if config.recorded_path is None:
            raise ValueError("provider mock-recorded needs recorded_path")
        provider = make_mock("recorded", recorded=config.recorded_path)
    elif config.provider == "chat":
        if not config.endpoint:
            raise ValueError("provider chat needs endpoint")
        provider = ChatCompletionsProvider(config.endpoint)
    elif config.provider == "completion":
        if not config.endpoint:
            raise ValueError("provider completion needs endpoint")
        provider = PlainCompletionsProvider(config.endpoint)
    else:
        raise ValueError(f"unknown provider {config.provider!r}")

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return Gateway(
        provider=provider,
        params=params,
        cache=ResponseCache(out / "cache.json"),
        log=RequestLog(out / "requests.log.jsonl"),
        concurrency=config.concurrency,
    )


def build_embedding_index(
    pool: list[TripleRecord], config: ExperimentConfig
) -> RetrievalIndex:
    if config.embedding_endpoint:
        from .retrieval import HttpEmbeddingProvider

        provider = HttpEmbeddingProvider(
            config.embedding_endpoint, config.embedding_model or config.model
        )
        return build_index(pool, provider=provider)
    return build_index(pool)


def run_experiment(config: ExperimentConfig) -> tuple[list[MetricReport], Path]:
    """Run every configured condition, score, and write the report files."""
    store = PETMStore.load(config.store)
    pool, test = select_splits(store, config)
    index = build_embedding_index(pool, config)
    gateway = build_gateway(config, store)

    outputs_dir = config.output_dir / "outputs"
    outputs_dir.mkdir(parents=True, exist_ok=True)

    rows = [baseline_row(test)]
    for task in config.tasks:
        outputs = run_condition(
            task, test, pool, index, gateway, config,
            output_path=outputs_dir / f"{task.value.lower()}.jsonl",
        )
        row, per_item = score_condition(
            outputs, store, label=task.value, with_marking_edits=task is not TaskKind.MT
        )
        with open(outputs_dir / f"{task.value.lower()}.scores.jsonl", "w", encoding="utf-8") as fh:
            for entry in per_item:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        rows.append(row)

    report_path = config.output_dir / "report.txt"
    report_path.write_text(render_report(rows), encoding="utf-8")
    (config.output_dir / "report.json").write_text(
        report_json(rows, config), encoding="utf-8"
    )
    return rows, report_path
