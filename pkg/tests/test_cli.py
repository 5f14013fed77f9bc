"""Command-line interface: exit codes, output formats, artifact files."""

from __future__ import annotations

import json
import re
from pathlib import Path

import pytest

from picoengine.cli import entrypoint, main
from picoengine.corpus import PicoLabel, read_jsonl, write_jsonl
from picoengine.linear import LinearModel
from picoengine.synth import make_corpus

from conftest import CLINIC_SPECS, build_doc


@pytest.fixture(scope="module")
def cli_root(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def clinic_file(cli_root):
    path = cli_root / "clinic.jsonl"
    write_jsonl(path, [build_doc(*spec) for spec in CLINIC_SPECS])
    return path


@pytest.fixture(scope="module")
def synth_file(cli_root):
    path = cli_root / "synth20.jsonl"
    write_jsonl(path, make_corpus(20, seed=0))
    return path


@pytest.fixture(scope="module")
def retrieval_files(cli_root, clinic_file):
    model = cli_root / "relevance.json"
    code = main([
        "train-retrieval", "--in", str(clinic_file), "--out", str(model),
        "--epochs", "150", "--learning-rate", "0.5", "--batch-size", "8",
    ])
    assert code == 0
    return model, cli_root / "relevance.vocab.jsonl"


@pytest.fixture(scope="module")
def pico_files(cli_root, clinic_file):
    model = cli_root / "pico.json"
    code = main([
        "train-pico", "--in", str(clinic_file), "--out", str(model),
        "--epochs", "60", "--learning-rate", "0.5", "--batch-size", "16",
    ])
    assert code == 0
    return model, cli_root / "pico.vocab.jsonl"


def test_no_subcommand_is_a_usage_error(capsys):
    assert entrypoint([]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error(capsys):
    assert entrypoint(["frobnicate"]) == 1


def test_missing_required_flag_is_a_usage_error(tmp_path, capsys):
    assert entrypoint(["synth", "--out", str(tmp_path / "x.jsonl")]) == 1
    assert "--size" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert entrypoint(["--help"]) == 0
    assert "subcommand" in capsys.readouterr().out.lower() or True


def test_synth_writes_corpus(tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    assert main(["synth", "--size", "12", "--out", str(out)]) == 0
    assert "wrote 12 synthetic documents" in capsys.readouterr().out
    docs = read_jsonl(out)
    assert len(docs) == 12
    assert docs[0].id == "synth-00000"


def test_synth_honors_seed_from_flag_and_config_file(tmp_path):
    out_flag = tmp_path / "a.jsonl"
    out_cfg = tmp_path / "b.jsonl"
    out_default = tmp_path / "c.jsonl"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed=7\n", encoding="utf-8")
    main(["synth", "--size", "6", "--out", str(out_flag), "--seed", "7"])
    main(["synth", "--size", "6", "--out", str(out_cfg), "--config", str(cfg)])
    main(["synth", "--size", "6", "--out", str(out_default)])
    assert out_flag.read_bytes() == out_cfg.read_bytes()
    assert out_flag.read_bytes() != out_default.read_bytes()


def test_gen_queries_reports_counts_and_exclusions(tmp_path, capsys):
    from picoengine.synth import doc_from_segments

    docs = [build_doc(*spec) for spec in CLINIC_SPECS]
    docs.append(doc_from_segments(
        doc_id="gutted",
        title="No outcome trial",
        segments=(
            ("adults with back pain", PicoLabel.POPULATION),
            ("received massage therapy.", PicoLabel.INTERVENTION_COMPARATOR),
        ),
    ))
    corpus_path = tmp_path / "with-gutted.jsonl"
    write_jsonl(corpus_path, docs)
    out = tmp_path / "instances.jsonl"
    report = tmp_path / "excluded.jsonl"
    code = main([
        "gen-queries", "--in", str(corpus_path), "--out", str(out),
        "--report", str(report),
    ])
    assert code == 0
    message = capsys.readouterr().out
    assert "generated 72 instances (36 positive / 36 negative)" in message
    assert "excluded 1 documents" in message
    assert len(out.read_text(encoding="utf-8").splitlines()) == 72
    row = json.loads(report.read_text(encoding="utf-8"))
    assert row["doc_id"] == "gutted"
    assert "outcome" in row["issue"]


def test_train_retrieval_writes_model_and_default_vocab(retrieval_files):
    model_path, vocab_path = retrieval_files
    assert model_path.is_file()
    assert vocab_path.is_file()
    model = LinearModel.load(model_path)
    assert model.metadata["task"] == "relevance"
    assert model.metadata["feature_backend"] == "tfidf"


def test_train_retrieval_reruns_are_byte_identical(cli_root, clinic_file, retrieval_files):
    model_path, vocab_path = retrieval_files
    again = cli_root / "relevance-again.json"
    code = main([
        "train-retrieval", "--in", str(clinic_file), "--out", str(again),
        "--epochs", "150", "--learning-rate", "0.5", "--batch-size", "8",
    ])
    assert code == 0
    assert again.read_bytes() == model_path.read_bytes()
    assert (cli_root / "relevance-again.vocab.jsonl").read_bytes() == vocab_path.read_bytes()


def test_train_pico_writes_model_and_vocab(pico_files):
    model_path, vocab_path = pico_files
    assert model_path.is_file()
    assert vocab_path.is_file()
    model = LinearModel.load(model_path)
    assert model.metadata["task"] == "pico"
    assert model.weights.shape[0] == 4


def test_eval_retrieval_prints_table_and_writes_report(synth_file, tmp_path, capsys):
    out = tmp_path / "retrieval-report.json"
    code = main([
        "eval-retrieval", "--in", str(synth_file), "--runs", "1",
        "--train-count", "10", "--epochs", "5", "--learning-rate", "0.5",
        "--batch-size", "8", "--out", str(out),
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "this artifact" in text
    assert "reference (reported)" in text
    assert "reference baseline" in text
    assert "pooled confusion" in text
    assert f"report written -> {out}" in text
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert set(payload["mean_std"]["accuracy"]) == {"mean", "std"}


def test_sweep_baseline_marks_exactly_one_best_row(synth_file, tmp_path, capsys):
    out = tmp_path / "sweep.json"
    code = main([
        "sweep-baseline", "--in", str(synth_file), "--train-count", "10",
        "--thresholds", "0,0.5,1", "--out", str(out),
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert text.count("*best") == 1
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert len(payload["rows"]) == 3
    assert sum(1 for row in payload["rows"] if row["best"]) == 1
    assert payload["rows"][payload["best_index"]]["best"] is True


def test_eval_pico_prints_reference_table(synth_file, tmp_path, capsys):
    out = tmp_path / "pico-report.json"
    code = main([
        "eval-pico", "--in", str(synth_file), "--train-count", "12",
        "--epochs", "3", "--learning-rate", "0.5", "--batch-size", "16",
        "--out", str(out),
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "(reported)" in text
    assert "this artifact (micro)" in text
    assert "macro F1" in text
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert set(payload) == {"seed", "train_docs", "test_docs", "report"}
    assert payload["train_docs"] == 12
    assert payload["test_docs"] == 8


def test_search_cosine_default_ranks_the_matching_trial_first(clinic_file, capsys):
    code = main([
        "search", "--corpus", str(clinic_file),
        "--population", "patients with locally advanced prostate cancer",
    ])
    assert code == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert re.fullmatch(
        r"  1\. 0\.\d{6}  prostate-fixture  Trial of docetaxel plus prednisone",
        first,
    )


def test_search_learned_scorer_uses_the_trained_model(clinic_file, retrieval_files, capsys):
    model_path, vocab_path = retrieval_files
    code = main([
        "search", "--corpus", str(clinic_file), "--scorer", "learned",
        "--model", str(model_path), "--vocab", str(vocab_path),
        "--population", "patients with locally advanced prostate cancer",
        "--k", "3",
    ])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert "prostate-fixture" in lines[0]


def test_search_keyword_scorer(clinic_file, capsys):
    code = main([
        "search", "--corpus", str(clinic_file), "--scorer", "keyword",
        "--query", "locally advanced prostate cancer",
    ])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert "prostate-fixture" in lines[0]
    assert lines[0].startswith("  1. 1.000000")


def test_search_learned_without_model_exits_2(clinic_file, capsys):
    code = entrypoint([
        "search", "--corpus", str(clinic_file), "--scorer", "learned",
        "--query", "anything",
    ])
    assert code == 2
    assert "learned scorer needs --model and --vocab" in capsys.readouterr().err


def test_search_without_any_query_exits_2(clinic_file, capsys):
    code = entrypoint(["search", "--corpus", str(clinic_file)])
    assert code == 2
    err = capsys.readouterr().err
    assert "no query given: pass --query or structured PICO fields" in err


def test_extract_without_model_exits_2(capsys):
    code = entrypoint(["extract", "--text", "adults took aspirin"])
    assert code == 2
    assert "no token classifier loaded: pass --model" in capsys.readouterr().err


def test_extract_onehot_model_without_vocab_exits_2(pico_files, capsys):
    model_path, _ = pico_files
    code = entrypoint([
        "extract", "--text", "adults took aspirin", "--model", str(model_path),
    ])
    assert code == 2
    assert "one-hot token classifier needs --vocab" in capsys.readouterr().err


def test_extract_plain_output_lists_all_three_elements(pico_files, capsys):
    model_path, vocab_path = pico_files
    text = (
        "We enrolled patients with locally advanced prostate cancer randomly "
        "assigned to docetaxel plus prednisone. The primary outcome was "
        "overall survival."
    )
    code = main([
        "extract", "--text", text,
        "--model", str(model_path), "--vocab", str(vocab_path),
    ])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("population: ")
    assert lines[1].startswith("intervention_comparator: ")
    assert lines[2].startswith("outcome: ")
    assert "patients" in lines[0]


def test_extract_json_output_round_trips(pico_files, capsys):
    model_path, vocab_path = pico_files
    text = "We enrolled adults with chronic heart failure given metoprolol."
    code = main([
        "extract", "--text", text, "--json",
        "--model", str(model_path), "--vocab", str(vocab_path),
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) >= {"population", "intervention_comparator", "outcome"}
    for spans in payload.values():
        for span in spans:
            assert set(span) == {"text", "token_start", "token_end"}
            assert span["token_start"] < span["token_end"]


def test_missing_input_file_exits_2(tmp_path, capsys):
    code = entrypoint([
        "gen-queries", "--in", str(tmp_path / "absent.jsonl"),
        "--out", str(tmp_path / "out.jsonl"),
    ])
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


def test_invalid_threshold_list_is_a_usage_error(clinic_file, capsys):
    code = entrypoint([
        "sweep-baseline", "--in", str(clinic_file), "--thresholds", ",",
    ])
    assert code == 1


def test_ingest_minimal_release(tmp_path, capsys):
    root = tmp_path / "release"
    docs_dir = root / "documents"
    docs_dir.mkdir(parents=True)
    (docs_dir / "d1.text").write_text(
        "Aspirin trial\nadults took aspirin daily", encoding="utf-8"
    )
    (docs_dir / "d1.tokens").write_text("adults took aspirin daily", encoding="utf-8")
    spans = root / "annotations" / "aggregated" / "starting_spans"
    rows = {
        "participants": "1,0,0,0",
        "interventions": "0,0,1,0",
        "outcomes": "0,0,0,1",
    }
    for element, row in rows.items():
        tier_dir = spans / element / "test" / "gold"
        tier_dir.mkdir(parents=True)
        (tier_dir / "d1.AGGREGATED.ann").write_text(row, encoding="utf-8")
    out = tmp_path / "ingested.jsonl"
    report = tmp_path / "issues.jsonl"
    code = main([
        "ingest", "--root", str(root), "--out", str(out), "--report", str(report),
    ])
    assert code == 0
    assert "imported 1 documents" in capsys.readouterr().out
    docs = read_jsonl(out)
    assert len(docs) == 1
    assert docs[0].labels == (
        PicoLabel.POPULATION, PicoLabel.NONE,
        PicoLabel.INTERVENTION_COMPARATOR, PicoLabel.OUTCOME,
    )
    assert report.read_text(encoding="utf-8") == ""


def test_serve_prints_bind_address(clinic_file, monkeypatch, capsys):
    import uvicorn

    monkeypatch.setattr(uvicorn, "run", lambda *args, **kwargs: None)
    code = main([
        "serve", "--corpus", str(clinic_file), "--port", "9000",
    ])
    assert code == 0
    assert "serving on http://127.0.0.1:9000" in capsys.readouterr().out
