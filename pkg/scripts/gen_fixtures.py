#!/usr/bin/env python3
"""Generate the committed end-to-end fixtures.

Produces a deterministic 50-record synthetic PE-TM (IT-domain style
sentences with seeded substitution errors and matching BAD markings), a
recorded-mock response file covering every prompt of the standard
three-condition run, and the golden report that replaying the run must
reproduce bit-exactly.

Rerunning this script regenerates identical files unless the retrieval,
prompting, or scoring behavior changed; diffs here are a signal that the
golden replay contract moved.
"""

from __future__ import annotations

import json
import random
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from petm.experiment import ExperimentConfig, pick_shots, run_experiment, select_splits  # noqa: E402
from petm.gateway import prompt_digest  # noqa: E402
from petm.prompting import PromptSpec, TaskKind, build_prompt, insert_marks  # noqa: E402
from petm.records import BAD, OK, PETMStore, TripleRecord  # noqa: E402
from petm.retrieval import build_index  # noqa: E402

FIXTURE_DIR = REPO / "tests" / "fixtures" / "e2e"

SEED = 20240601
SPLIT_SEED = 7
POOL_SIZE = 25
TEST_SIZE = 25
SHOTS = 5

NOUNS = [
    ("server", "Server", "den"),
    ("module", "Modul", "das"),
    ("session", "Sitzung", "die"),
    ("browser", "Browser", "den"),
    ("network", "Netzwerk", "das"),
    ("user", "Benutzer", "den"),
    ("directory", "Verzeichnis", "das"),
    ("password", "Passwort", "das"),
    ("cookie", "Cookie", "den"),
    ("file", "Datei", "die"),
    ("button", "Schaltfläche", "die"),
    ("setting", "Einstellung", "die"),
]

VERBS = [
    ("stores", "speichert"),
    ("deletes", "löscht"),
    ("opens", "öffnet"),
    ("closes", "schließt"),
    ("supports", "unterstützt"),
    ("restarts", "startet"),
    ("checks", "prüft"),
    ("sends", "sendet"),
    ("loads", "lädt"),
    ("blocks", "blockiert"),
]

TAILS = [
    ("after the timeout", ["nach", "der", "Zeitüberschreitung"]),
    ("on the local console", ["auf", "der", "lokalen", "Konsole"]),
    ("without any warning", ["ohne", "jede", "Warnung"]),
    ("during the update", ["während", "der", "Aktualisierung"]),
    ("in the background", ["im", "Hintergrund"]),
    ("before the restart", ["vor", "dem", "Neustart"]),
]

WRONG = {
    "speichert": "sichert",
    "löscht": "entfernt",
    "öffnet": "eröffnet",
    "schließt": "beendet",
    "unterstützt": "erlaubt",
    "startet": "bootet",
    "prüft": "überprüft",
    "sendet": "schickt",
    "lädt": "holt",
    "blockiert": "sperrt",
    "Server": "Dienst",
    "Modul": "Baustein",
    "Sitzung": "Session",
    "Browser": "Navigator",
    "Netzwerk": "Netz",
    "Benutzer": "Nutzer",
    "Verzeichnis": "Ordner",
    "Passwort": "Kennwort",
    "Cookie": "Keks",
    "Datei": "Akte",
    "Schaltfläche": "Knopf",
    "Einstellung": "Option",
    "Zeitüberschreitung": "Auszeit",
    "Konsole": "Terminal",
    "Warnung": "Meldung",
    "Aktualisierung": "Aufdatierung",
    "Hintergrund": "Untergrund",
    "Neustart": "Wiederstart",
    "der": "die",
    "dem": "den",
    "Der": "Die",
}

ALL_WRONG = sorted(set(WRONG.values()))


def make_records(rng: random.Random) -> list[TripleRecord]:
    combos = []
    for noun in NOUNS:
        for verb in VERBS:
            for obj in NOUNS:
                if obj is noun:
                    continue
                for tail in TAILS:
                    combos.append((noun, verb, obj, tail))
    rng.shuffle(combos)

    records = []
    for i, (noun, verb, obj, tail) in enumerate(combos[:50]):
        noun_en, noun_de, _ = noun
        verb_en, verb_de = verb
        obj_en, obj_de, obj_art = obj
        tail_en, tail_de = tail
        source = f"The {noun_en} {verb_en} the {obj_en} {tail_en}."
        ref_tokens = ["Der", noun_de, verb_de, obj_art, obj_de, *tail_de, "."]

        hyp_tokens = list(ref_tokens)
        marks = [OK] * len(hyp_tokens)
        # substitutable positions: everything except the final period
        positions = list(range(len(hyp_tokens) - 1))
        rng.shuffle(positions)
        n_marked = rng.randint(1, 3)
        chosen = positions[:n_marked]
        for pos in chosen:
            token = hyp_tokens[pos]
            hyp_tokens[pos] = WRONG.get(token, rng.choice(ALL_WRONG))
            marks[pos] = BAD
        if rng.random() < 0.4 and len(positions) > n_marked:
            # an error the annotator missed: wrong token, not marked
            pos = positions[n_marked]
            token = hyp_tokens[pos]
            hyp_tokens[pos] = WRONG.get(token, rng.choice(ALL_WRONG))

        records.append(
            TripleRecord(
                id=f"syn-{i:03d}",
                source=source,
                hypothesis=" ".join(hyp_tokens),
                reference=" ".join(ref_tokens),
                markings=marks,
                annotator_id=f"a{1 + i % 3}",
            )
        )
    return records


def simulate_response(
    task: TaskKind, record: TripleRecord, rng: random.Random
) -> str:
    ref_tokens = record.reference.split()
    hyp_tokens = record.hypothesis.split()
    marks = record.markings or [OK] * len(hyp_tokens)

    if task is TaskKind.MT:
        out = list(ref_tokens)
        if rng.random() > 0.6:
            pos = rng.randrange(len(out) - 1)
            out[pos] = WRONG.get(out[pos], rng.choice(ALL_WRONG))
        return " ".join(out)

    if task is TaskKind.MRK and rng.random() < 0.15:
        # the copying failure mode: parrot the tagged hypothesis line
        return insert_marks(hyp_tokens, list(marks))

    fix_marked = 0.85 if task is TaskKind.MRK else 0.30
    fix_unmarked = 0.30
    perturb = 0.01 if task is TaskKind.MRK else 0.02
    out = []
    for pos, token in enumerate(hyp_tokens):
        ref_token = ref_tokens[pos]
        if marks[pos] == BAD:
            out.append(ref_token if rng.random() < fix_marked else token)
        elif token != ref_token:
            out.append(ref_token if rng.random() < fix_unmarked else token)
        else:
            if rng.random() < perturb:
                out.append(WRONG.get(token, rng.choice(ALL_WRONG)))
            else:
                out.append(token)
    return " ".join(out)


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)

    records = make_records(rng)
    store = PETMStore(records)
    store_path = FIXTURE_DIR / "petm50.jsonl"
    store.save(store_path)
    print(f"wrote {len(records)} records to {store_path}")

    config = ExperimentConfig(
        store=store_path,
        output_dir=FIXTURE_DIR / "unused",
        shots=SHOTS,
        pool_size=POOL_SIZE,
        test_size=TEST_SIZE,
        seed=SPLIT_SEED,
        provider="mock-recorded",
        recorded_path=FIXTURE_DIR / "recorded_responses.json",
    )

    pool, test = select_splits(store, config)
    index = build_index(pool)
    responses: dict[str, str] = {}
    sim_rng = random.Random(SEED + 1)
    for task in (TaskKind.MT, TaskKind.APE, TaskKind.MRK):
        for record in test:
            shots = pick_shots(record, pool, index, config)
            prompt = build_prompt(PromptSpec(task, shots, record))
            responses[prompt_digest(prompt)] = simulate_response(task, record, sim_rng)
    recorded_path = FIXTURE_DIR / "recorded_responses.json"
    recorded_path.write_text(
        json.dumps(responses, ensure_ascii=False, indent=0, sort_keys=True),
        encoding="utf-8",
    )
    print(f"wrote {len(responses)} recorded responses to {recorded_path}")

    with tempfile.TemporaryDirectory() as tmp:
        run_config = ExperimentConfig(
            store=store_path,
            output_dir=Path(tmp),
            shots=SHOTS,
            pool_size=POOL_SIZE,
            test_size=TEST_SIZE,
            seed=SPLIT_SEED,
            provider="mock-recorded",
            recorded_path=recorded_path,
        )
        rows, report_path = run_experiment(run_config)
        shutil.copy(report_path, FIXTURE_DIR / "golden_report.txt")
        shutil.copy(Path(tmp) / "report.json", FIXTURE_DIR / "golden_report.json")
    print((FIXTURE_DIR / "golden_report.txt").read_text(encoding="utf-8"))

    example_config = {
        "store": "petm50.jsonl",
        "output_dir": "out",
        "tasks": ["MT", "APE", "MRK"],
        "shots": SHOTS,
        "pool_size": POOL_SIZE,
        "test_size": TEST_SIZE,
        "seed": SPLIT_SEED,
        "provider": "mock-recorded",
        "recorded_path": "recorded_responses.json",
    }
    (FIXTURE_DIR / "config.json").write_text(
        json.dumps(example_config, indent=2) + "\n", encoding="utf-8"
    )
    print("wrote example config.json")


if __name__ == "__main__":
    main()
