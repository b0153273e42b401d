import json
from pathlib import Path

import pytest

from answersim.corpus import load_dataset
from answersim.errors import (
    EvaluationError,
    SchemaError,
    UnsupportedLanguage,
)
from answersim.report import (
    ALL_METRICS,
    RunConfig,
    config_from_mapping,
    evaluate,
    parse_config_file,
)

FIXTURES = Path(__file__).parent / "fixtures"


def bundle_config(tmp_path, metrics=ALL_METRICS, **overrides):
    kwargs = dict(
        dataset=str(FIXTURES / "answers.ndjson"),
        metrics=tuple(metrics),
        token_embeddings=str(FIXTURES / "tokens_l2.ndjson"),
        sentence_embeddings=str(FIXTURES / "sentences.ndjson"),
        pair_scores=str(FIXTURES / "pairs.ndjson"),
        output_dir=str(tmp_path / "out"),
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


class TestConfigFile:
    def test_parse_key_values_with_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# evaluation run\n"
            "dataset = data.ndjson\n"
            "metrics = em, f1\n"
            "idf = true  # weighting on\n"
            "\n"
            "output_dir = results\n",
            encoding="utf-8",
        )
        values = parse_config_file(path)
        config = config_from_mapping(values)
        assert config.dataset == "data.ndjson"
        assert config.metrics == ("em", "f1")
        assert config.idf is True
        assert config.output_dir == "results"

    def test_line_without_equals_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("dataset data.ndjson\n", encoding="utf-8")
        with pytest.raises(SchemaError, match="line 1"):
            parse_config_file(path)

    def test_unknown_key_rejected(self):
        with pytest.raises(SchemaError, match="mystery"):
            config_from_mapping({"dataset": "d", "mystery": "1"})

    def test_bad_boolean_rejected(self):
        with pytest.raises(SchemaError):
            config_from_mapping({"dataset": "d", "idf": "perhaps"})

    def test_missing_dataset_rejected(self):
        with pytest.raises(SchemaError, match="dataset"):
            config_from_mapping({"metrics": "em"})


class TestConfigValidation:
    def test_embedding_metric_without_binding(self, tmp_path):
        config = RunConfig(dataset="d.ndjson", metrics=("bert_score",))
        with pytest.raises(SchemaError, match="bert_score"):
            config.validate()

    def test_unknown_metric(self):
        config = RunConfig(dataset="d.ndjson", metrics=("nonsense",))
        with pytest.raises(SchemaError, match="nonsense"):
            config.validate()


class TestEvaluate:
    def test_writes_all_report_files(self, tmp_path):
        report = evaluate(bundle_config(tmp_path))
        for name in ("correlations", "scores", "histogram", "timings"):
            assert Path(report.files[name]).exists()
        assert report.n_records == 16

    def test_correlations_csv_shape(self, tmp_path):
        report = evaluate(bundle_config(tmp_path))
        lines = Path(report.files["correlations"]).read_text().splitlines()
        header = lines[0].split(",")
        assert header[0] == "metric"
        assert len(header) == 1 + 3 * 3
        assert [line.split(",")[0] for line in lines[1:]] == list(ALL_METRICS)

    def test_f1_zero_bucket_marks_constant_lexical_scores(self, tmp_path):
        report = evaluate(bundle_config(tmp_path, metrics=("f1",)))
        lines = Path(report.files["correlations"]).read_text().splitlines()
        row = dict(zip(lines[0].split(","), lines[1].split(",")))
        assert row["f1_zero_r"].startswith("insufficient_data")
        assert not row["f1_nonzero_r"].startswith("insufficient_data")

    def test_scores_ndjson_covers_every_record_and_metric(self, tmp_path):
        report = evaluate(bundle_config(tmp_path))
        lines = Path(report.files["scores"]).read_text().splitlines()
        assert len(lines) == 16
        for line in lines:
            row = json.loads(line)
            assert set(row["scores"]) == set(ALL_METRICS)
            assert row["partition"] in ("f1_zero", "f1_nonzero")

    def test_histogram_rows_fixed_layout(self, tmp_path):
        report = evaluate(bundle_config(tmp_path, metrics=("em", "f1")))
        lines = Path(report.files["histogram"]).read_text().splitlines()
        # header + metrics * labels(all,0,1,2) * 20 bins
        assert len(lines) == 1 + 2 * 4 * 20

    def test_timings_follow_config_order(self, tmp_path):
        metrics = ("rouge_l", "em", "bleu")
        report = evaluate(bundle_config(tmp_path, metrics=metrics))
        lines = Path(report.files["timings"]).read_text().splitlines()
        assert [line.split(",")[0] for line in lines[1:]] == list(metrics)

    def test_byte_identical_reruns(self, tmp_path):
        config_a = bundle_config(tmp_path / "a")
        config_b = bundle_config(tmp_path / "b")
        report_a = evaluate(config_a)
        report_b = evaluate(config_b)
        for name in ("correlations", "scores", "histogram"):
            bytes_a = Path(report_a.files[name]).read_bytes()
            bytes_b = Path(report_b.files[name]).read_bytes()
            assert bytes_a == bytes_b

    def test_perfect_metric_reads_one(self, tmp_path):
        # build a dataset + pair scores where score equals the label
        dataset = load_dataset(FIXTURES / "answers.ndjson")
        from answersim.providers import write_pair_file

        rows = []
        for record in dataset:
            label = record.label if record.label is not None else 1
            rows.append((record.id, "ab", float(label)))
        pair_path = tmp_path / "perfect.ndjson"
        write_pair_file(pair_path, rows, "oracle")
        config = bundle_config(tmp_path, metrics=("sas",), pair_scores=str(pair_path))
        report = evaluate(config)
        lines = Path(report.files["correlations"]).read_text().splitlines()
        row = dict(zip(lines[0].split(","), lines[1].split(",")))
        for cell in ("all_r", "all_rho", "all_tau"):
            assert row[cell] == "1.0000"

    def test_missing_pair_score_is_annotated(self, tmp_path):
        from answersim.providers import write_pair_file

        pair_path = tmp_path / "partial.ndjson"
        write_pair_file(pair_path, [("r01", "ab", 0.5)], "partial")
        config = bundle_config(tmp_path, metrics=("sas",), pair_scores=str(pair_path))
        with pytest.raises(EvaluationError) as excinfo:
            evaluate(config)
        assert excinfo.value.metric == "sas"
        assert excinfo.value.record_id == "r02"
        assert excinfo.value.kind == "provider"

    def test_meteor_refused_for_german_dataset(self, tmp_path):
        from answersim.corpus import Dataset, EvalRecord, save_dataset

        records = (
            EvalRecord(id="g1", answer_a="die Antwort", answer_b="eine Antwort", label=1, lang="de"),
        )
        path = tmp_path / "german.ndjson"
        save_dataset(Dataset(name="g", records=records, lang="de"), path)
        config = RunConfig(dataset=str(path), metrics=("meteor",), output_dir=str(tmp_path / "out"))
        with pytest.raises(UnsupportedLanguage):
            evaluate(config)

    def test_http_providers_match_file_providers(self, tmp_path):
        from mockserver import MockProviderServer

        with MockProviderServer() as server:
            http_config = bundle_config(
                tmp_path / "http",
                metrics=("bert_score", "bi_encoder", "sas"),
                token_embeddings=server.endpoint,
                sentence_embeddings=server.endpoint,
                pair_scores=server.endpoint,
                layer=2,
            )
            http_report = evaluate(http_config)
        file_report = evaluate(
            bundle_config(tmp_path / "file", metrics=("bert_score", "bi_encoder", "sas"))
        )
        http_lines = Path(http_report.files["correlations"]).read_bytes()
        file_lines = Path(file_report.files["correlations"]).read_bytes()
        assert http_lines == file_lines
