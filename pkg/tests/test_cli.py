"""Command-line surface: each subcommand end to end, exit codes, config files."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from agentaudit.cli import main

FIXDIR = Path(__file__).resolve().parents[1] / "src" / "agentaudit" / "fixtures"


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def corpus_paths(tmp_path, capsys):
    out = tmp_path / "corpus.json"
    code, _, _ = run(capsys, "inject", "--dataset", "german_credit",
                     "--out", str(out), "--seed", "7")
    assert code == 0
    return out, tmp_path / "corpus_labels.json"


class TestInject:
    def test_writes_corpus_and_labels(self, tmp_path, capsys):
        out = tmp_path / "c.json"
        code, stdout, _ = run(capsys, "inject", "--dataset", "german_credit",
                              "--out", str(out))
        assert code == 0
        assert "wrote" in stdout
        assert out.exists() and (tmp_path / "c_labels.json").exists()
        labels = json.loads((tmp_path / "c_labels.json").read_text())
        assert sum(1 for l in labels["labels"].values() if l["is_faulty"]) == 15


class TestAudit:
    def test_json_doc_with_labels(self, corpus_paths, capsys):
        log, labels = corpus_paths
        code, stdout, _ = run(capsys, "audit", "--log", str(log),
                              "--labels", str(labels), "--sigma", "0")
        assert code == 0
        doc = json.loads(stdout)
        assert sorted(doc) == ["findings", "kind", "report"]
        rep = doc["report"]
        assert (rep["tp"], rep["fp"], rep["fn"], rep["tn"]) == (13, 0, 2, 10)

    def test_no_labels_and_markdown(self, corpus_paths, capsys):
        log, _ = corpus_paths
        code, stdout, _ = run(capsys, "audit", "--log", str(log), "--sigma", "0")
        assert json.loads(stdout)["report"] is None
        code, stdout, _ = run(capsys, "audit", "--log", str(log),
                              "--sigma", "0", "--format", "md")
        assert code == 0 and stdout.startswith("#")

    def test_missing_log_exits_1(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "audit", "--log",
                              str(tmp_path / "nope.json"))
        assert code == 1 and "error" in stderr


class TestValidateReasoning:
    def test_generate_then_reuse(self, corpus_paths, tmp_path, capsys):
        log, _ = corpus_paths
        snip = tmp_path / "snips.json"
        code, stdout, stderr = run(capsys, "validate-reasoning", "--log",
                                   str(log), "--snippets", str(snip),
                                   "--generate")
        assert code == 0
        assert "wrote 60 snippets" in stderr
        doc = json.loads(stdout)
        assert doc["kind"] == "validation" and doc["n"] == 60
        assert set(doc["comparisons"]) == {"rule", "stochastic"}
        # second pass consumes the snippet file without --generate
        code, stdout2, _ = run(capsys, "validate-reasoning", "--log", str(log),
                               "--snippets", str(snip))
        assert code == 0 and json.loads(stdout2)["n"] == 60


class TestAssessModel:
    def test_json_report(self, capsys):
        code, stdout, _ = run(capsys, "assess-model", "--data",
                              str(FIXDIR / "german_credit.csv"), "--schema",
                              str(FIXDIR / "german_credit.schema.json"),
                              "--model", "logistic", "--no-efficiency")
        assert code == 0
        doc = json.loads(stdout)
        assert doc["kind"] == "assess"
        assert doc["model_kind"] == "logistic"
        assert doc["efficiency"] is None
        assert "accuracy" in doc["task"]


class TestCounterfactual:
    def test_reexec_doc_shape(self, corpus_paths, capsys):
        log, _ = corpus_paths
        code, stdout, _ = run(capsys, "counterfactual", "--data",
                              str(FIXDIR / "german_credit.csv"), "--schema",
                              str(FIXDIR / "german_credit.schema.json"),
                              "--log", str(log))
        assert code == 0
        doc = json.loads(stdout)
        assert sorted(doc) == ["attribution", "kind", "mode", "ranking",
                               "results", "seed"]
        assert doc["mode"] == "reexec" and len(doc["results"]) == 9


class TestExperiment:
    def test_exp1_single_seed_json(self, capsys):
        code, stdout, _ = run(capsys, "experiment", "--id", "1",
                              "--config-json", '{"sigma": 0.0}')
        assert code == 0
        doc = json.loads(stdout)
        assert doc["overall"]["tp"] == 65 and doc["overall"]["fp"] == 0

    def test_out_dir_writes_files(self, tmp_path, capsys):
        code, stdout, stderr = run(capsys, "experiment", "--id", "1",
                                   "--out", str(tmp_path),
                                   "--config-json", '{"sigma": 0.0}')
        assert code == 0
        assert (tmp_path / "exp1.json").exists()
        assert "wrote" in stderr and stdout == ""

    def test_bad_id_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["experiment", "--id", "9"])
        assert exc.value.code == 2


class TestBench:
    def test_quick_bench(self, capsys):
        code, stdout, _ = run(capsys, "bench", "--iterations", "2",
                              "--warmup", "1")
        assert code == 0
        doc = json.loads(stdout)
        assert doc["kind"] == "bench" and doc["iterations"] == 2


class TestConfigFile:
    def test_defaults_from_config_yield_to_flags(self, tmp_path, capsys,
                                                 corpus_paths):
        log, labels = corpus_paths
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sigma": 0.0, "format": "md"}))
        # config supplies sigma and format
        code, stdout, _ = run(capsys, "--config", str(cfg), "audit",
                              "--log", str(log), "--labels", str(labels))
        assert code == 0 and stdout.startswith("#")
        # explicit flag beats the config value
        code, stdout, _ = run(capsys, "--config", str(cfg), "audit",
                              "--log", str(log), "--labels", str(labels),
                              "--format", "json")
        assert code == 0 and json.loads(stdout)["report"]["fn"] == 2

    def test_unreadable_config_exits_1(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "--config", str(tmp_path / "x.json"),
                              "audit", "--log", "whatever")
        assert code == 1 and "config" in stderr
