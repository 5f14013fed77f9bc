"""Experiment orchestration: seeding, repeated runs, and the baseline sweep."""

from __future__ import annotations

import json

import pytest

from picoengine.corpus import PicoLabel
from picoengine.errors import DataError
from picoengine.experiments import (
    PICO_REFERENCE,
    RETRIEVAL_REFERENCE,
    ExperimentConfig,
    derive_run_seed,
    run_baseline_sweep,
    run_retrieval_experiment,
)
from picoengine.linear import TrainConfig
from picoengine.querygen import NEGATIVE, POSITIVE, POSITIVE_MASKS, QueryInstance

from conftest import build_doc


def test_derive_run_seed_is_affine_mod_2_31():
    assert derive_run_seed(0, 0) == 0
    assert derive_run_seed(0, 3) == 3
    assert derive_run_seed(1, 0) == 1_000_003
    assert derive_run_seed(7, 2) == (7 * 1_000_003 + 2) % 2**31
    assert 0 <= derive_run_seed(2**40, 5) < 2**31


def test_experiment_config_validation():
    with pytest.raises(DataError, match="runs must be >= 1"):
        ExperimentConfig(train_count=10, runs=0)
    with pytest.raises(DataError, match="unknown pair feature backend"):
        ExperimentConfig(train_count=10, backend="magic")
    with pytest.raises(DataError, match="threshold must be in"):
        ExperimentConfig(train_count=10, threshold=1.5)


def test_reference_tables_for_display():
    assert RETRIEVAL_REFERENCE["reference_model"]["accuracy"] == pytest.approx(0.9944)
    assert RETRIEVAL_REFERENCE["reference_best_baseline"]["accuracy"] == pytest.approx(0.9535)
    assert set(PICO_REFERENCE) == {"LogReg", "LSTM-CRF", "LSTM-CRF-BERT"}
    for row in PICO_REFERENCE.values():
        assert set(row) == {"f1", "precision", "recall"}


def _tiny_config(runs: int = 2, **kwargs) -> ExperimentConfig:
    return ExperimentConfig(
        train_count=20,
        runs=runs,
        seed=0,
        hyper=TrainConfig(epochs=8, learning_rate=0.5, batch_size=8),
        **kwargs,
    )


def test_run_retrieval_experiment_report_structure(small_corpus):
    corpus = small_corpus[:30]
    report = run_retrieval_experiment(corpus, _tiny_config())
    assert report.runs == 2
    assert len(report.run_details) == 2
    for run_index, detail in enumerate(report.run_details):
        assert detail["run"] == run_index
        assert detail["seed"] == derive_run_seed(0, run_index)
        assert detail["train_docs"] == 20
        assert detail["test_docs"] == 10
        assert detail["train_instances"] == 8 * 20
        assert detail["test_instances"] == 8 * 10
        assert detail["excluded_train_docs"] == 0
        assert detail["excluded_test_docs"] == 0
        assert detail["final_train_loss"] is not None
        assert "train_ids" not in detail
    # pooled confusion counts every test instance of every run
    assert report.confusion.total == 2 * 8 * 10
    assert set(report.mean_std) == {"accuracy", "f1_negative", "f1_positive"}
    as_json = json.dumps(report.to_dict(), sort_keys=True)
    again = run_retrieval_experiment(corpus, _tiny_config())
    assert json.dumps(again.to_dict(), sort_keys=True) == as_json


def test_single_run_reports_zero_std(small_corpus):
    report = run_retrieval_experiment(small_corpus[:30], _tiny_config(runs=1))
    for mean, std in report.mean_std.values():
        assert std == 0.0
        assert 0.0 <= mean <= 1.0


def test_include_split_ids_lists_the_partition(small_corpus):
    corpus = small_corpus[:30]
    report = run_retrieval_experiment(corpus, _tiny_config(runs=1, include_split_ids=True))
    detail = report.run_details[0]
    assert len(detail["train_ids"]) == 20
    assert len(detail["test_ids"]) == 10
    assert set(detail["train_ids"]) | set(detail["test_ids"]) == {d.id for d in corpus}
    assert detail["train_ids"] == sorted(detail["train_ids"])


def test_different_master_seeds_change_the_split(small_corpus):
    corpus = small_corpus[:30]
    a = run_retrieval_experiment(corpus, _tiny_config(runs=1, include_split_ids=True))
    b_config = ExperimentConfig(
        train_count=20, runs=1, seed=1,
        hyper=TrainConfig(epochs=8, learning_rate=0.5, batch_size=8),
        include_split_ids=True,
    )
    b = run_retrieval_experiment(corpus, b_config)
    assert a.run_details[0]["train_ids"] != b.run_details[0]["train_ids"]


def test_dense_backend_requires_embeddings(small_corpus):
    config = _tiny_config(runs=1, backend="dense")
    with pytest.raises(DataError, match="dense backend needs an embeddings file"):
        run_retrieval_experiment(small_corpus[:30], config)


# ---------------------------------------------------------------------------
# Baseline sweep


def _hand_instances():
    """Five documents; queries built so keyword fractions are transparent."""
    docs = [
        build_doc("m1", "adults with measles", "vitamin therapy", ("fever days",)),
        build_doc("m2", "children with mumps", "rest advice", ("swelling size",)),
        build_doc("m3", "adults with rubella", "fluid support", ("rash extent",)),
        build_doc("m4", "infants with colic", "massage touch", ("crying hours",)),
        build_doc("m5", "elders with shingles", "zinc cream", ("pain score",)),
    ]
    full = POSITIVE_MASKS[0]
    instances = [
        QueryInstance("population: adults with measles", "m1", "m1", POSITIVE, full),
        QueryInstance("population: adults with measles", "m1", "m2", NEGATIVE, full),
        QueryInstance("population: children with mumps", "m2", "m2", POSITIVE, full),
        QueryInstance("population: children with mumps", "m2", "m3", NEGATIVE, full),
    ]
    return docs, instances


def test_baseline_sweep_rows_match_hand_fractions():
    docs, instances = _hand_instances()
    # keyword sets: {population, adults, measles} and {population, children,
    # mumps}; the clause word "population" never appears in an abstract, so
    # the positive pairs score 2/3 and the cross pairs score 0
    sweep = run_baseline_sweep(instances, docs, thresholds=[0.0, 0.5, 1.0])
    assert [row.threshold for row in sweep.rows] == [0.0, 0.5, 1.0]
    # threshold 0: everything predicted positive
    assert sweep.rows[0].confusion.to_lists() == [[0, 2], [0, 2]]
    assert sweep.rows[0].accuracy == pytest.approx(0.5)
    # threshold 0.5: only the true pairs clear it
    assert sweep.rows[1].confusion.to_lists() == [[2, 0], [0, 2]]
    assert sweep.rows[1].accuracy == pytest.approx(1.0)
    # threshold 1.0: the 2/3 positives fall below it as well
    assert sweep.rows[2].confusion.to_lists() == [[2, 0], [2, 0]]
    assert sweep.rows[2].accuracy == pytest.approx(0.5)
    assert sweep.best_index == 1  # first row with the maximal accuracy
    assert sweep.best.threshold == 0.5


def test_baseline_sweep_boundary_is_inclusive():
    docs, instances = _hand_instances()
    pair = [instances[0], instances[1]]  # fractions 2/3 and 0
    sweep = run_baseline_sweep(pair, docs, thresholds=[2 / 3])
    # a fraction exactly at the threshold counts as positive
    assert sweep.rows[0].confusion.to_lists() == [[1, 0], [0, 1]]
    assert sweep.rows[0].accuracy == pytest.approx(1.0)


def test_baseline_sweep_best_row_dominates_all_rows(small_corpus):
    from picoengine.querygen import generate_instances

    corpus = small_corpus[:40]
    instances = generate_instances(corpus, seed=5).instances
    thresholds = [i / 20 for i in range(21)]
    sweep = run_baseline_sweep(instances, corpus, thresholds)
    best = sweep.best
    assert all(best.accuracy >= row.accuracy for row in sweep.rows)
    first_max = next(
        i for i, row in enumerate(sweep.rows) if row.accuracy == best.accuracy
    )
    assert sweep.best_index == first_max
    payload = sweep.to_dict()
    assert payload["best_index"] == sweep.best_index
    assert [r["best"] for r in payload["rows"]].count(True) == 1
    assert payload["rows"][sweep.best_index]["best"] is True


def test_baseline_sweep_input_validation():
    docs, instances = _hand_instances()
    with pytest.raises(DataError, match="no thresholds"):
        run_baseline_sweep(instances, docs, thresholds=[])
    with pytest.raises(DataError, match="no instances"):
        run_baseline_sweep([], docs, thresholds=[0.5])
    stray = QueryInstance("population: adults", "m1", "ghost", NEGATIVE, POSITIVE_MASKS[0])
    with pytest.raises(DataError, match="unknown document 'ghost'"):
        run_baseline_sweep([stray], docs, thresholds=[0.5])
