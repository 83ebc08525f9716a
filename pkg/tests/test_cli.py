"""Command-line round trips through main()."""

import json

import pytest

from watersearch.cli import main
from watersearch.corpus import save_training_text, synthetic_corpus
from watersearch.search import GenerationTrace
from watersearch.detect import DetectionReport


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    docs = synthetic_corpus(n_docs=60, doc_len=120, vocab_size=400, branching=30, seed=5)
    corpus_txt = root / "train.txt"
    save_training_text(docs, str(corpus_txt))
    model_path = root / "model.txt"
    rc = main([
        "train-model", "--corpus", str(corpus_txt), "--order", "2",
        "--smoothing-k", "1.0", "--out", str(model_path),
    ])
    assert rc == 0
    jsonl = root / "prompts.jsonl"
    with open(jsonl, "w") as fh:
        for i in range(5):
            fh.write(json.dumps({"id": f"d{i}", "prompt": " ".join(docs[i][:3])}) + "\n")
    return {"root": root, "model": str(model_path), "corpus": str(jsonl),
            "prompt": " ".join(docs[0][:3])}


GEN_FLAGS = ["--scheme", "soft", "--gamma", "0.25", "--delta", "4", "--beams", "5",
             "--chunk-size", "20", "--alpha", "0.75", "--key", "41",
             "--max-tokens", "100", "--rng-seed", "11"]


class TestGenerate:
    def test_generates_and_traces(self, workdir, capsys):
        out = workdir["root"] / "wm.txt"
        trace = workdir["root"] / "wm.trace.json"
        rc = main(["generate", "--model", workdir["model"], "--prompt", workdir["prompt"],
                   "--out", str(out), "--trace", str(trace), *GEN_FLAGS])
        assert rc == 0
        echo = json.loads(capsys.readouterr().out)
        assert echo["tokens"] == 100
        text = out.read_text().split()
        assert len(text) == 100
        parsed = GenerationTrace.from_json(trace.read_text())
        assert len(parsed.output_ids) == 100

    def test_same_flags_identical_outputs(self, workdir):
        a = workdir["root"] / "a.txt"
        b = workdir["root"] / "b.txt"
        for path in (a, b):
            rc = main(["generate", "--model", workdir["model"], "--prompt",
                       workdir["prompt"], "--out", str(path), *GEN_FLAGS])
            assert rc == 0
        assert a.read_text() == b.read_text()

    def test_zero_budget_writes_empty_file(self, workdir):
        out = workdir["root"] / "empty.txt"
        rc = main(["generate", "--model", workdir["model"], "--prompt", workdir["prompt"],
                   "--out", str(out), "--max-tokens", "0"])
        assert rc == 0
        assert out.read_text() == ""

    def test_corpus_prompt_source(self, workdir):
        out = workdir["root"] / "fromcorpus.txt"
        rc = main(["generate", "--model", workdir["model"], "--corpus", workdir["corpus"],
                   "--doc-id", "d2", "--out", str(out), "--max-tokens", "40"])
        assert rc == 0
        assert len(out.read_text().split()) == 40

    def test_missing_prompt_is_usage_error(self, workdir):
        rc = main(["generate", "--model", workdir["model"],
                   "--out", str(workdir["root"] / "x.txt")])
        assert rc == 2

    def test_baseline_mode(self, workdir):
        out = workdir["root"] / "base.txt"
        rc = main(["generate", "--model", workdir["model"], "--prompt", workdir["prompt"],
                   "--out", str(out), "--baseline", "--max-tokens", "60"])
        assert rc == 0
        assert len(out.read_text().split()) == 60


class TestDetect:
    def test_round_trip_verdict(self, workdir, capsys):
        out = workdir["root"] / "wm2.txt"
        rc = main(["generate", "--model", workdir["model"], "--prompt", workdir["prompt"],
                   "--out", str(out), *GEN_FLAGS])
        assert rc == 0
        capsys.readouterr()
        rc = main(["detect", "--in", str(out), "--model", workdir["model"],
                   "--prompt", workdir["prompt"], "--key", "41",
                   "--beams", "5", "--chunk-size", "20"])
        assert rc == 0
        report = DetectionReport.from_json(capsys.readouterr().out)
        assert report.verdict is True

    def test_wrong_key_not_detected(self, workdir, capsys):
        out = workdir["root"] / "wm3.txt"
        main(["generate", "--model", workdir["model"], "--prompt", workdir["prompt"],
              "--out", str(out), *GEN_FLAGS])
        capsys.readouterr()
        rc = main(["detect", "--in", str(out), "--model", workdir["model"],
                   "--prompt", workdir["prompt"], "--key", "31337"])
        assert rc == 0
        report = DetectionReport.from_json(capsys.readouterr().out)
        assert report.verdict is False

    def test_empty_input_exit_2(self, workdir, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        rc = main(["detect", "--in", str(empty), "--model", workdir["model"]])
        assert rc == 2

    def test_threshold_one_always_flags(self, workdir, capsys):
        clean = workdir["root"] / "clean.txt"
        clean.write_text("ba ko ti " * 30)
        rc = main(["detect", "--in", str(clean), "--model", workdir["model"],
                   "--threshold", "1.0"])
        assert rc == 0
        report = DetectionReport.from_json(capsys.readouterr().out)
        assert report.verdict is True


class TestAttack:
    def test_insert_count_rule(self, workdir, capsys):
        src = workdir["root"] / "src.txt"
        src.write_text(" ".join(["ba"] * 100))
        out = workdir["root"] / "attacked.txt"
        rc = main(["attack", "--in", str(src), "--out", str(out), "--attack", "insert",
                   "--rate", "0.3", "--seed", "5", "--model", workdir["model"]])
        assert rc == 0
        echo = json.loads(capsys.readouterr().out)
        assert echo["tokens_out"] == 130
        assert len(out.read_text().split()) == 130

    def test_bad_rate_exit_2(self, workdir):
        src = workdir["root"] / "src2.txt"
        src.write_text("ba ko ti")
        rc = main(["attack", "--in", str(src), "--out",
                   str(workdir["root"] / "x.txt"), "--attack", "insert",
                   "--rate", "1.5", "--model", workdir["model"]])
        assert rc == 2

    def test_unknown_attack_kind_exit_2(self, workdir, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["attack", "--in", "x", "--out", "y", "--attack", "scramble",
                  "--rate", "0.5"])
        assert exc.value.code == 2


class TestHarnessCommands:
    def test_simulate_null_csv(self, workdir, capsys):
        out = workdir["root"] / "null.csv"
        rc = main(["simulate-null", "--trials", "50", "--doc-len", "100",
                   "--vocab-size", "400", "--out", str(out)])
        assert rc == 0
        echo = json.loads(capsys.readouterr().out)
        assert echo["trials"] == 50
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("schema_version")
        assert len(lines) == 51

    def test_theory_csv(self, workdir, capsys):
        out = workdir["root"] / "theory.csv"
        rc = main(["theory", "--out", str(out), "--grid-resolution", "2000"])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 65  # header + 64 families
        assert "max |r_micro - r_macro|" in capsys.readouterr().out

    def test_evaluate_csv_and_sweep(self, workdir):
        out = workdir["root"] / "eval.csv"
        rc = main(["evaluate", "--model", workdir["model"], "--corpus", workdir["corpus"],
                   "--trials", "2", "--out", str(out), "--beams-grid", "2,3",
                   "--max-tokens", "40", "--rng-seed", "3"])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3  # header + 2 configs
        assert lines[0].split(",")[:6] == [
            "schema_version", "label", "trials", "threshold", "tpr", "tnr"
        ]

    def test_config_file_precedence(self, workdir, capsys):
        cfg = workdir["root"] / "cfg.json"
        cfg.write_text(json.dumps({"max-tokens": 30, "rng-seed": 4}))
        out = workdir["root"] / "cfg_out.txt"
        rc = main(["generate", "--model", workdir["model"], "--prompt", workdir["prompt"],
                   "--out", str(out), "--config", str(cfg), "--max-tokens", "10"])
        assert rc == 0
        echo = json.loads(capsys.readouterr().out)
        # explicit flag (10) beats config file (30); config beats default for rng
        assert echo["tokens"] == 10
        assert echo["rng_seed"] == 4
