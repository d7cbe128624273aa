import json

import pytest

from petm.errors import EmptyOutputSet, ProviderUnavailable
from petm.experiment import (
    BASELINE_LABEL,
    ExperimentConfig,
    ItemOutput,
    baseline_row,
    render_report,
    report_json,
    rows_from_report_json,
    run_experiment,
    score_condition,
    select_splits,
)
from petm.metrics import MetricReport
from petm.prompting import TaskKind
from petm.records import PETMStore

E2E = "tests/fixtures/e2e"


def e2e_config(fixtures_dir, tmp_path, provider: str, **overrides) -> ExperimentConfig:
    defaults = dict(
        store=fixtures_dir / "e2e" / "petm50.jsonl",
        output_dir=tmp_path / "out",
        shots=5,
        pool_size=25,
        test_size=25,
        seed=7,
        provider=provider,
        recorded_path=fixtures_dir / "e2e" / "recorded_responses.json",
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestSelectSplits:
    def test_explicit_sizes(self, fixtures_dir, tmp_path):
        config = e2e_config(fixtures_dir, tmp_path, "mock-echo")
        store = PETMStore.load(config.store)
        pool, test = select_splits(store, config)
        assert len(pool) == 25 and len(test) == 25
        assert not {r.id for r in pool} & {r.id for r in test}

    def test_label_reuse(self, fixtures_dir, tmp_path):
        config = e2e_config(fixtures_dir, tmp_path, "mock-echo")
        store = PETMStore.load(config.store)
        pool_ids, test_ids = [r.id for r in select_splits(store, config)[0]], None
        from petm.records import apply_split, split_pool

        p, t = split_pool(store, 25, 25, seed=7)
        labeled = apply_split(store, p, t)
        labeled_config = e2e_config(
            fixtures_dir, tmp_path, "mock-echo", pool_size=None, test_size=None
        )
        pool2, test2 = select_splits(labeled, labeled_config)
        assert [r.id for r in pool2] and [r.id for r in test2]
        assert {r.id for r in pool2} == set(p)


class TestClosures:
    def test_return_reference_mock_scores_perfect(self, fixtures_dir, tmp_path):
        config = e2e_config(fixtures_dir, tmp_path, "mock-reference")
        rows, _ = run_experiment(config)
        for row in rows[1:]:
            assert row.bleu == 100.0, row.label
            assert row.ter == 0.0, row.label
            assert row.n_failed == 0

    def test_echo_mock_matches_baseline(self, fixtures_dir, tmp_path):
        config = e2e_config(
            fixtures_dir, tmp_path, "mock-echo", tasks=[TaskKind.APE, TaskKind.MRK]
        )
        rows, _ = run_experiment(config)
        baseline, ape, mrk = rows
        assert baseline.label == BASELINE_LABEL
        for row in (ape, mrk):
            assert row.bleu == pytest.approx(baseline.bleu, abs=1e-9)
            assert row.ter == pytest.approx(baseline.ter, abs=1e-9)
            assert row.me == 0.0
            assert row.ue == 0.0
        assert ape.to_json_dict() | {"label": "x"} == mrk.to_json_dict() | {"label": "x"}

    def test_baseline_row_has_null_marking_edits(self, fixtures_dir, tmp_path):
        config = e2e_config(fixtures_dir, tmp_path, "mock-echo")
        store = PETMStore.load(config.store)
        _, test = select_splits(store, config)
        row = baseline_row(test)
        assert row.label == BASELINE_LABEL
        assert row.me is None and row.ue is None

    def test_warm_cache_rerun_is_free_and_identical(self, fixtures_dir, tmp_path):
        config = e2e_config(fixtures_dir, tmp_path, "mock-recorded")
        run_experiment(config)
        first_report = (config.output_dir / "report.txt").read_bytes()
        first_json = (config.output_dir / "report.json").read_bytes()

        class ExplodingProvider:
            name = "exploding"

            def complete(self, prompt, params):
                raise AssertionError("provider must not be called on a warm cache")

        import petm.experiment as exp

        original = exp.build_gateway

        def patched(cfg, store):
            gateway = original(cfg, store)
            gateway.provider = ExplodingProvider()
            return gateway

        exp.build_gateway = patched
        try:
            run_experiment(config)
        finally:
            exp.build_gateway = original
        assert (config.output_dir / "report.txt").read_bytes() == first_report
        assert (config.output_dir / "report.json").read_bytes() == first_json


class TestFixedShots:
    def test_every_item_gets_the_same_first_k_pool_records(self, fixtures_dir, tmp_path):
        from petm.experiment import pick_shots
        from petm.retrieval import build_index

        config = e2e_config(fixtures_dir, tmp_path, "mock-echo", fixed_shots=True, shots=3)
        store = PETMStore.load(config.store)
        pool, test = select_splits(store, config)
        index = build_index(pool)
        expected = [r.id for r in pool[:3]]
        for record in test[:5]:
            assert [s.id for s in pick_shots(record, pool, index, config)] == expected

    def test_retrieved_shots_vary_by_item(self, fixtures_dir, tmp_path):
        from petm.experiment import pick_shots
        from petm.retrieval import build_index

        config = e2e_config(fixtures_dir, tmp_path, "mock-echo", shots=3)
        store = PETMStore.load(config.store)
        pool, test = select_splits(store, config)
        index = build_index(pool)
        picks = {tuple(s.id for s in pick_shots(r, pool, index, config)) for r in test}
        assert len(picks) > 1


class TestScoring:
    def make_outputs(self, store, ids, text_fn, failed_ids=()):
        outputs = []
        for record_id in ids:
            record = store.get(record_id)
            if record_id in failed_ids:
                outputs.append(
                    ItemOutput(record_id, "d", None, None, failed=True, error="x")
                )
            else:
                outputs.append(ItemOutput(record_id, "d", "raw", text_fn(record)))
        return outputs

    def test_reference_outputs_score_100(self, fixtures_dir, tmp_path):
        store = PETMStore.load(fixtures_dir / "e2e" / "petm50.jsonl")
        ids = [r.id for r in store][:10]
        outputs = self.make_outputs(store, ids, lambda r: r.reference)
        row, _ = score_condition(outputs, store, "x")
        assert row.bleu == 100.0 and row.ter == 0.0

    def test_echo_outputs_zero_marking_edits(self, fixtures_dir):
        store = PETMStore.load(fixtures_dir / "e2e" / "petm50.jsonl")
        ids = [r.id for r in store][:10]
        outputs = self.make_outputs(store, ids, lambda r: r.hypothesis)
        row, per_item = score_condition(outputs, store, "x")
        assert row.me == 0.0 and row.ue == 0.0
        assert len(per_item) == 10

    def test_failed_items_excluded_and_counted(self, fixtures_dir):
        store = PETMStore.load(fixtures_dir / "e2e" / "petm50.jsonl")
        ids = [r.id for r in store][:10]
        outputs = self.make_outputs(
            store, ids, lambda r: r.reference, failed_ids=set(ids[:3])
        )
        row, _ = score_condition(outputs, store, "x")
        assert row.n_scored == 7
        assert row.n_failed == 3
        assert row.bleu == 100.0

    def test_all_failed_rejected(self, fixtures_dir):
        store = PETMStore.load(fixtures_dir / "e2e" / "petm50.jsonl")
        ids = [r.id for r in store][:3]
        outputs = self.make_outputs(store, ids, lambda r: r.reference, failed_ids=set(ids))
        with pytest.raises(EmptyOutputSet):
            score_condition(outputs, store, "x")


class TestReportRendering:
    def rows(self):
        return [
            MetricReport(label=BASELINE_LABEL, bleu=28.92, ter=55.12),
            MetricReport(label="MT", bleu=29.83, ter=55.97),
            MetricReport(label="APE", bleu=29.79, ter=54.56, me=7.30, ue=1.76),
            MetricReport(label="MRK", bleu=30.09, ter=54.70, me=14.76, ue=3.60),
        ]

    def test_baseline_na_cells(self):
        text = render_report(self.rows())
        line = next(l for l in text.splitlines() if l.startswith(BASELINE_LABEL))
        assert line.count("N.A.") == 2
        assert "28.92" in line and "55.12" in line

    def test_one_line_per_row(self):
        text = render_report(self.rows())
        body = [l for l in text.splitlines() if l and not l.startswith(("Condition", "BLEU", "TER"))]
        assert len(body) == 4

    def test_signatures_present(self):
        text = render_report(self.rows())
        assert "nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp" in text
        assert "nrefs:1|case:lc|tok:tercom|norm:no|punct:yes" in text

    def test_json_round_trips_to_same_table(self, fixtures_dir, tmp_path):
        config = e2e_config(fixtures_dir, tmp_path, "mock-recorded")
        payload = report_json(self.rows(), config)
        assert render_report(rows_from_report_json(payload)) == render_report(self.rows())
        parsed = json.loads(payload)
        assert parsed["shots"] == 5 and parsed["seed"] == 7


class TestConfig:
    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_dict({"store": "s", "output_dir": "o", "bogus": 1})

    def test_from_file(self, fixtures_dir, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "store": str(fixtures_dir / "e2e" / "petm50.jsonl"),
                    "output_dir": str(tmp_path / "out"),
                    "tasks": ["mt"],
                    "shots": 3,
                    "provider": "mock-echo",
                    "pool_size": 25,
                    "test_size": 25,
                    "seed": 7,
                }
            )
        )
        config = ExperimentConfig.from_file(config_path)
        assert config.tasks == [TaskKind.MT]
        assert config.shots == 3
