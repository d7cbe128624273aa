import json

import pytest

from petm.cli import main
from petm.records import PETMStore


@pytest.fixture
def parallel_files(tmp_path):
    src = tmp_path / "src.txt"
    tgt = tmp_path / "tgt.txt"
    src.write_text(
        "\n".join(
            [
                "The server does not support the request type",
                "short one",
                "The module stores the session data on the client side",
                "contact admin@example.com for all further details today",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    tgt.write_text(
        "\n".join(
            [
                "Der Server unterstützt den angeforderten Typ nicht",
                "zu kurz",
                "Das Modul speichert die Sitzungsdaten auf der Client-Seite",
                "kontaktieren Sie uns für alle weiteren Details noch heute",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return src, tgt


def test_ingest(tmp_path, parallel_files, capsys):
    src, tgt = parallel_files
    out = tmp_path / "candidates.jsonl"
    assert main(["ingest", "--source", str(src), "--target", str(tgt), "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert json.loads(lines[0])["reference"].startswith("Der Server")


def test_filter_drops_and_reports(tmp_path, parallel_files, capsys):
    src, tgt = parallel_files
    out = tmp_path / "filtered.jsonl"
    assert main(["filter", "--source", str(src), "--target", str(tgt), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "segments in:  4" in stdout
    assert "dropped TooShort: 1" in stdout
    assert "dropped PII: 1" in stdout
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2


def test_split_run_score_report_cycle(tmp_path, fixtures_dir, capsys):
    store_src = (fixtures_dir / "e2e" / "petm50.jsonl").read_text(encoding="utf-8")
    store_path = tmp_path / "store.jsonl"
    store_path.write_text(store_src, encoding="utf-8")

    assert main(
        ["split", "--store", str(store_path), "--pool", "25", "--test", "25", "--seed", "7"]
    ) == 0
    labeled = PETMStore.load(store_path)
    assert sum(1 for r in labeled if r.split == "pool") == 25

    out_dir = tmp_path / "run"
    assert main(
        [
            "run", "--store", str(store_path), "--out", str(out_dir),
            "--task", "ape", "--provider", "mock-echo", "--shots", "3",
        ]
    ) == 0
    stdout = capsys.readouterr().out
    assert "Original Hyps" in stdout
    assert (out_dir / "outputs" / "ape.jsonl").exists()
    assert (out_dir / "report.json").exists()

    assert main(
        [
            "score", "--store", str(store_path),
            "--outputs", str(out_dir / "outputs" / "ape.jsonl"), "--label", "APE",
        ]
    ) == 0
    assert "APE" in capsys.readouterr().out

    assert main(["report", "--json", str(out_dir / "report.json")]) == 0
    assert "BLEU signature" in capsys.readouterr().out


def test_run_with_config_file(tmp_path, fixtures_dir, capsys):
    config = {
        "store": str(fixtures_dir / "e2e" / "petm50.jsonl"),
        "output_dir": str(tmp_path / "out"),
        "tasks": ["mrk"],
        "shots": 5,
        "pool_size": 25,
        "test_size": 25,
        "seed": 7,
        "provider": "mock-recorded",
        "recorded_path": str(fixtures_dir / "e2e" / "recorded_responses.json"),
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    assert main(["run", "--config", str(config_path)]) == 0
    assert "MRK" in capsys.readouterr().out


def test_score_text_mode(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    ref = tmp_path / "ref.txt"
    hyp.write_text("ein kleiner Test mit vier Tokens\n", encoding="utf-8")
    ref.write_text("ein kleiner Test mit vier Tokens\n", encoding="utf-8")
    assert main(["score", "--hyp", str(hyp), "--ref", str(ref)]) == 0
    stdout = capsys.readouterr().out
    assert "BLEU = 100.00" in stdout
    assert "TER  = 0.00" in stdout


def test_agree_over_export(tmp_path, capsys):
    lines = []
    for coder in ("a1", "a2"):
        for i in range(3):
            lines.append(
                json.dumps(
                    {
                        "id": f"item-{i}@{coder}",
                        "source": f"src {i}",
                        "hypothesis": "eins zwei drei",
                        "reference": f"ref {i}",
                        "markings": [1, 0, 0] if coder == "a1" else [1, 0, 1],
                        "annotator_id": coder,
                    }
                )
            )
    export = tmp_path / "export.jsonl"
    export.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["agree", "--export", str(export)]) == 0
    stdout = capsys.readouterr().out
    assert "Percent Marked on Average" in stdout
    assert main(["agree", "--export", str(export), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_common_items"] == 3
