"""Command-line entry points.

Subcommands: ingest, filter, split, run, score, agree, report, serve.
Run options can come from flags or a single JSON config file whose keys
mirror the flag names (see experiment.CONFIG_KEYS).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment as exp
from . import pipeline as pl
from .agreement import agreement_report, render_agreement
from .metrics import BLEU_SIGNATURE, TER_SIGNATURE, bleu_corpus, me_ue, ter_corpus
from .metrics.diffs import MEUECounts
from .prompting import TaskKind
from .records import PETMStore, apply_split, split_pool, tokenize_ws, write_records_jsonl


def _read_pairs(args) -> list[pl.SegmentPair]:
    if args.tsv:
        return pl.read_tsv(args.tsv)
    if args.source and args.target:
        return pl.read_parallel_files(args.source, args.target)
    raise SystemExit("need --tsv or both --source and --target")


def cmd_ingest(args) -> int:
    pairs = _read_pairs(args)
    if args.sample is not None:
        pairs = pl.sample_pairs(pairs, args.sample, args.seed)
    records = pl.to_candidate_records(pairs, id_prefix=args.id_prefix)
    write_records_jsonl(records, args.out)
    print(f"wrote {len(records)} candidate records to {args.out}")
    return 0


def cmd_filter(args) -> int:
    pairs = _read_pairs(args)
    rules: list[pl.FilterRule] = [
        pl.LengthBounds(min_words=args.min_words, max_words=args.max_words)
    ]
    if not args.no_langid:
        rules.append(pl.WrongLanguage(source_lang=args.source_lang, target_lang=args.target_lang))
    rules.append(pl.NonAlnumRatio(max_ratio=args.max_nonalnum))
    if not args.no_pii:
        rules.append(pl.PiiFilter())
    retained, report = pl.run_pipeline(pairs, rules)
    if args.sample is not None:
        retained = pl.sample_pairs(retained, args.sample, args.seed)
    records = pl.to_candidate_records(retained, id_prefix=args.id_prefix)
    write_records_jsonl(records, args.out)
    print(pl.render_filter_report(report))
    if args.sample is not None:
        print(f"sampled:      {len(records)}")
    print(f"wrote {len(records)} candidate records to {args.out}")
    return 0


def cmd_split(args) -> int:
    store = PETMStore.load(args.store)
    pool_ids, test_ids = split_pool(store, args.pool, args.test, args.seed)
    labeled = apply_split(store, pool_ids, test_ids)
    labeled.save(args.out or args.store)
    print(
        f"split {len(pool_ids)} pool / {len(test_ids)} test "
        f"over {len(store.usable_records())} usable records (seed {args.seed})"
    )
    return 0


def cmd_run(args) -> int:
    if args.config:
        config = exp.ExperimentConfig.from_file(args.config)
    else:
        if not args.store or not args.out:
            raise SystemExit("need --config, or --store and --out")
        tasks = (
            [TaskKind(t.upper()) for t in args.task]
            if args.task
            else [TaskKind.MT, TaskKind.APE, TaskKind.MRK]
        )
        config = exp.ExperimentConfig(
            store=Path(args.store),
            output_dir=Path(args.out),
            tasks=tasks,
            shots=args.shots,
            pool_size=args.pool,
            test_size=args.test,
            seed=args.seed,
            fixed_shots=args.fixed_shots,
            provider=args.provider,
            recorded_path=Path(args.recorded) if args.recorded else None,
            endpoint=args.endpoint,
            model=args.model,
            concurrency=args.concurrency,
        )
    rows, report_path = exp.run_experiment(config)
    print(exp.render_report(rows), end="")
    print(f"report written to {report_path}")
    return 0


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def cmd_score(args) -> int:
    if args.outputs and args.store:
        store = PETMStore.load(args.store)
        outputs = [
            exp.ItemOutput.from_json_dict(json.loads(line))
            for line in _read_lines(args.outputs)
            if line.strip()
        ]
        row, _ = exp.score_condition(
            outputs, store, label=args.label, with_marking_edits=not args.no_marking_edits
        )
        print(exp.render_report([row]), end="")
        return 0

    if not (args.hyp and args.ref):
        raise SystemExit("need --outputs and --store, or --hyp and --ref")
    hyps = _read_lines(args.hyp)
    refs = _read_lines(args.ref)
    if len(hyps) != len(refs):
        raise SystemExit(f"line counts differ: {len(hyps)} vs {len(refs)}")
    bleu = bleu_corpus(hyps, refs)
    ter = ter_corpus(hyps, refs)
    print(f"BLEU = {bleu:.2f}   ({BLEU_SIGNATURE})")
    print(f"TER  = {ter:.2f}   ({TER_SIGNATURE})")
    if args.orig:
        originals = PETMStore.load(args.orig).records
        if len(originals) != len(hyps):
            raise SystemExit("original store must align with hypothesis lines")
        totals = MEUECounts(0, 0, 0, 0)
        for record, hyp in zip(originals, hyps):
            if record.markings is None:
                continue
            totals = totals + me_ue(
                record.hypothesis_tokens(), record.markings, tokenize_ws(hyp)
            )
        me = "N.A." if totals.me_percent is None else f"{totals.me_percent:.2f}"
        ue = "N.A." if totals.ue_percent is None else f"{totals.ue_percent:.2f}"
        print(f"ME   = {me}")
        print(f"UE   = {ue}")
    return 0


def cmd_agree(args) -> int:
    store = PETMStore.load(args.export)
    report = agreement_report(store.records)
    if args.json:
        print(json.dumps(report.to_json_dict(), ensure_ascii=False, indent=2))
    else:
        print(render_agreement(report))
    return 0


def cmd_report(args) -> int:
    rows = exp.rows_from_report_json(Path(args.json).read_text(encoding="utf-8"))
    print(exp.render_report(rows), end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import AnnotationService, create_app

    items = PETMStore.load(args.items, validate=not args.no_validate)
    pool = PETMStore.load(args.pool).usable_records() if args.pool else []

    gateway = None
    if pool and not args.no_live_correction:
        config = exp.ExperimentConfig(
            store=Path(args.items),
            output_dir=Path(args.state_dir),
            provider=args.provider,
            recorded_path=Path(args.recorded) if args.recorded else None,
            endpoint=args.endpoint,
            model=args.model,
        )
        gateway = exp.build_gateway(config, items)

    service = AnnotationService(
        items=items,
        state_dir=args.state_dir,
        pool=pool,
        gateway=gateway,
        trial_size=args.trial_size,
        block_size=args.block_size,
        shots=args.shots,
        live_correction=not args.no_live_correction,
    )
    app = create_app(service, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="petm",
        description="Post-editing translation memory workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input_args(p):
        p.add_argument("--source", help="source-side text file, one segment per line")
        p.add_argument("--target", help="target-side text file, aligned with --source")
        p.add_argument("--tsv", help="TSV file with source<TAB>target")
        p.add_argument("--out", required=True, help="output JSONL path")
        p.add_argument("--id-prefix", default="item")
        p.add_argument("--sample", type=int, help="seeded random subset size")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ingest", help="convert parallel text to PE-TM candidates")
    add_input_args(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="apply corpus filters and write candidates")
    add_input_args(p)
    p.add_argument("--min-words", type=int, default=5)
    p.add_argument("--max-words", type=int, default=25)
    p.add_argument("--max-nonalnum", type=float, default=0.20)
    p.add_argument("--source-lang", default="en")
    p.add_argument("--target-lang", default="de")
    p.add_argument("--no-langid", action="store_true")
    p.add_argument("--no-pii", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("split", help="label pool/test splits in a store")
    p.add_argument("--store", required=True)
    p.add_argument("--pool", type=int, required=True)
    p.add_argument("--test", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write to this path instead of in place")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("run", help="run MT/APE/MRK conditions and write a report")
    p.add_argument("--config", help="JSON config file supplying every option")
    p.add_argument("--store")
    p.add_argument("--out")
    p.add_argument("--task", action="append", choices=["mt", "ape", "mrk"])
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--pool", type=int)
    p.add_argument("--test", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixed-shots", action="store_true",
                   help="same shots for every item instead of per-item retrieval")
    p.add_argument("--provider", default="mock-echo",
                   choices=["mock-echo", "mock-reference", "mock-recorded", "chat", "completion"])
    p.add_argument("--recorded", help="recorded-mock response file")
    p.add_argument("--endpoint", help="remote provider URL")
    p.add_argument("--model", default="mock")
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score outputs with BLEU/TER (and ME/UE)")
    p.add_argument("--outputs", help="condition outputs JSONL from `run`")
    p.add_argument("--store", help="PE-TM store with references and markings")
    p.add_argument("--label", default="scored")
    p.add_argument("--no-marking-edits", action="store_true")
    p.add_argument("--hyp", help="hypothesis text file, one segment per line")
    p.add_argument("--ref", help="reference text file, aligned with --hyp")
    p.add_argument("--orig", help="PE-TM JSONL aligned with --hyp for ME/UE")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("agree", help="agreement statistics over an annotation export")
    p.add_argument("--export", required=True, help="JSONL export from the service")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("report", help="render a report.json back to the table")
    p.add_argument("--json", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the annotation service")
    p.add_argument("--items", required=True, help="store of items to annotate")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--pool", help="PE-TM store backing live corrections")
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--trial-size", type=int, default=50)
    p.add_argument("--block-size", type=int, default=500)
    p.add_argument("--provider", default="mock-echo",
                   choices=["mock-echo", "mock-reference", "mock-recorded", "chat", "completion"])
    p.add_argument("--recorded")
    p.add_argument("--endpoint")
    p.add_argument("--model", default="mock")
    p.add_argument("--no-live-correction", action="store_true")
    p.add_argument("--no-validate", action="store_true",
                   help="load items without record validation")
    p.add_argument("--ui", help="directory with the built web UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
