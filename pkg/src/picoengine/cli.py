"""Command-line interface.

Subcommands cover the whole pipeline: corpus ingestion, query generation,
training, evaluation, ad-hoc search/extraction, and serving the HTTP API.
Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    DEFAULT_HOST,
    DEFAULT_PORT,
    ENV_HOST,
    ENV_PORT,
    load_config_file,
    resolve,
)
from .corpus import (
    AnnotatedDocument,
    LoadIssue,
    PicoLabel,
    import_ebm_nlp,
    read_jsonl,
    write_jsonl,
    write_load_report,
)
from .encoder import (
    DenseBackend,
    TfidfBackend,
    build_vocab,
    cosine,
    encode_tfidf,
    load_embeddings,
    read_vocab_jsonl,
    terms,
    tokenize,
    write_vocab_jsonl,
)
from .errors import ModelError, PicoEngineError
from .evaluation import EvalReport
from .experiments import (
    PICO_REFERENCE,
    RETRIEVAL_REFERENCE,
    ExperimentConfig,
    derive_run_seed,
    run_baseline_sweep,
    run_retrieval_experiment,
)
from .linear import LinearModel, TrainConfig
from .pico import (
    TokenFeatureConfig,
    evaluate_pico,
    extract_document,
    extraction_to_dict,
    predict_labels,
    train_pico,
)
from .querygen import generate_instances, split, write_instances_jsonl
from .retrieval import query_keywords, rank, train_relevance
from .synth import make_corpus
from .template import render_query


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    parser.add_argument(
        "--config",
        default=None,
        help="config file: JSON object or key=value lines",
    )


def _add_hyper(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=None, help="training epochs (default 20)")
    parser.add_argument("--learning-rate", type=float, default=None, help="SGD step size (default 0.1)")
    parser.add_argument("--l2", type=float, default=None, help="L2 penalty (default 0)")
    parser.add_argument("--batch-size", type=int, default=None, help="mini-batch size (default 32)")


def _add_token_features(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, default=None, help="neighbor tokens per side (default 1)")
    parser.add_argument("--no-casing", action="store_true", help="drop the capitalization feature")
    parser.add_argument("--no-position", action="store_true", help="drop the position-bucket feature")
    parser.add_argument("--min-df", type=int, default=None, help="minimum document frequency (default 1)")


def _load_cfg(args) -> dict:
    return load_config_file(args.config) if args.config else {}


def _seed_of(args, cfg: dict) -> int:
    return int(resolve(args.seed, cfg, "seed", 0))


def _hyper_of(args, cfg: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=int(resolve(args.epochs, cfg, "epochs", 20)),
        learning_rate=float(resolve(args.learning_rate, cfg, "learning_rate", 0.1)),
        l2=float(resolve(args.l2, cfg, "l2", 0.0)),
        seed=seed,
        batch_size=int(resolve(args.batch_size, cfg, "batch_size", 32)),
    )


def _token_config_of(args, cfg: dict) -> TokenFeatureConfig:
    return TokenFeatureConfig(
        window=int(resolve(args.window, cfg, "window", 1)),
        use_casing=not args.no_casing,
        use_position=not args.no_position,
        backend="onehot",
    )


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _vocab_out(args) -> str:
    if args.vocab_out:
        return args.vocab_out
    return str(Path(args.out).with_suffix(".vocab.jsonl"))


def _structured_query(args) -> str:
    if args.query:
        return args.query
    clauses: dict[PicoLabel, list[str]] = {}
    if args.population:
        clauses[PicoLabel.POPULATION] = [args.population]
    parts = [p for p in (args.intervention, args.comparator) if p]
    if parts:
        clauses[PicoLabel.INTERVENTION_COMPARATOR] = parts
    if args.outcome:
        clauses[PicoLabel.OUTCOME] = [args.outcome]
    if not clauses:
        raise ModelError("no query given: pass --query or structured PICO fields")
    return render_query(clauses)


# ---------------------------------------------------------------------------
# Subcommand handlers


def cmd_ingest(args) -> int:
    result = import_ebm_nlp(args.root, tier=args.tier)
    write_jsonl(args.out, result.documents)
    if args.report:
        write_load_report(args.report, result.report)
    print(
        f"imported {len(result.documents)} documents "
        f"({len(result.report)} issues) -> {args.out}"
    )
    return 0


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    docs = make_corpus(args.size, seed=seed)
    write_jsonl(args.out, docs)
    print(f"wrote {len(docs)} synthetic documents -> {args.out}")
    return 0


def cmd_gen_queries(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    docs = read_jsonl(args.input)
    result = generate_instances(docs, seed)
    write_instances_jsonl(args.out, result.instances)
    if args.report:
        write_load_report(
            args.report,
            [LoadIssue(doc_id=d, issue=r) for d, r in result.excluded],
        )
    positives = sum(1 for i in result.instances if i.relevance == "positive")
    print(
        f"generated {len(result.instances)} instances "
        f"({positives} positive / {len(result.instances) - positives} negative), "
        f"excluded {len(result.excluded)} documents -> {args.out}"
    )
    return 0


def _make_cli_backend(args, docs, min_df: int):
    if args.backend == "dense":
        if not args.embeddings:
            raise ModelError("dense backend needs --embeddings")
        return DenseBackend(load_embeddings(args.embeddings)), None
    vocab = build_vocab(docs, min_df=min_df)
    return TfidfBackend(vocab), vocab


def cmd_train_retrieval(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    hyper = _hyper_of(args, cfg, seed)
    docs = read_jsonl(args.input)
    min_df = int(resolve(args.min_df, cfg, "min_df", 1))
    backend, vocab = _make_cli_backend(args, docs, min_df)
    generated = generate_instances(docs, seed)
    by_id = {doc.id: doc for doc in docs}
    labeled = [
        (backend.encode_pair(inst.query_text, by_id[inst.paired_doc_id]), inst.relevance)
        for inst in generated.instances
    ]
    trained = train_relevance(labeled, hyper)
    trained.model.save(args.out)
    if vocab is not None:
        write_vocab_jsonl(_vocab_out(args), vocab)
    final_loss = trained.losses[-1] if trained.losses else float("nan")
    print(
        f"trained relevance model on {len(labeled)} instances; "
        f"final loss {final_loss:.6f} -> {args.out}"
    )
    return 0


def cmd_train_pico(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    hyper = _hyper_of(args, cfg, seed)
    token_config = _token_config_of(args, cfg)
    min_df = int(resolve(args.min_df, cfg, "min_df", 1))
    docs = read_jsonl(args.input)
    result = train_pico(docs, token_config, hyper, min_df=min_df)
    result.model.save(args.out)
    if result.vocab is not None:
        write_vocab_jsonl(_vocab_out(args), result.vocab)
    final_loss = result.losses[-1] if result.losses else float("nan")
    print(
        f"trained token classifier on {len(docs)} documents; "
        f"final loss {final_loss:.6f} -> {args.out}"
    )
    return 0


def _print_retrieval_table(report: EvalReport) -> None:
    acc = report.mean_std["accuracy"]
    f1n = report.mean_std["f1_negative"]
    f1p = report.mean_std["f1_positive"]
    ref_model = RETRIEVAL_REFERENCE["reference_model"]
    ref_base = RETRIEVAL_REFERENCE["reference_best_baseline"]
    print(f"{'':24s}{'accuracy':>18s}{'F1 negative':>18s}{'F1 positive':>18s}")
    print(
        f"{'this artifact':24s}"
        f"{acc[0]:>10.4f}+/-{acc[1]:.4f}"
        f"{f1n[0]:>10.4f}+/-{f1n[1]:.4f}"
        f"{f1p[0]:>10.4f}+/-{f1p[1]:.4f}"
    )
    print(
        f"{'reference (reported)':24s}"
        f"{ref_model['accuracy']:>18.4f}"
        f"{ref_model['f1_negative']:>18.4f}"
        f"{ref_model['f1_positive']:>18.4f}"
    )
    print(
        f"{'reference baseline':24s}"
        f"{ref_base['accuracy']:>18.4f}"
        f"{ref_base['f1_negative']:>18.4f}"
        f"{ref_base['f1_positive']:>18.4f}"
    )
    print("pooled confusion (rows true, columns predicted):")
    for row in report.confusion.to_lists():
        print("  " + "  ".join(f"{value:>8d}" for value in row))


def cmd_eval_retrieval(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    hyper = _hyper_of(args, cfg, seed)
    docs = read_jsonl(args.input)
    default_train = max(1, (len(docs) * 4) // 5)
    exp = ExperimentConfig(
        train_count=int(resolve(args.train_count, cfg, "train_count", default_train)),
        runs=int(resolve(args.runs, cfg, "runs", 5)),
        seed=seed,
        backend=args.backend,
        hyper=hyper,
        threshold=float(resolve(args.threshold, cfg, "threshold", 0.5)),
        min_df=int(resolve(args.min_df, cfg, "min_df", 1)),
        embeddings_path=args.embeddings,
        include_split_ids=args.include_split_ids,
    )
    report = run_retrieval_experiment(docs, exp)
    _print_retrieval_table(report)
    if args.out:
        _write_json(args.out, report.to_dict())
        print(f"report written -> {args.out}")
    return 0


def cmd_eval_pico(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    hyper = _hyper_of(args, cfg, seed)
    token_config = _token_config_of(args, cfg)
    min_df = int(resolve(args.min_df, cfg, "min_df", 1))
    docs = read_jsonl(args.input)
    default_train = max(1, len(docs) - 200)
    train_count = int(resolve(args.train_count, cfg, "train_count", default_train))
    train_docs, test_docs = split(docs, train_count, seed)
    trained = train_pico(train_docs, token_config, hyper, min_df=min_df)
    report = evaluate_pico(trained.model, test_docs, token_config, trained.vocab)
    print(f"{'model':24s}{'F1':>10s}{'precision':>12s}{'recall':>10s}")
    for name, ref in PICO_REFERENCE.items():
        print(
            f"{name + ' (reported)':24s}"
            f"{ref['f1']:>10.2f}{ref['precision']:>12.2f}{ref['recall']:>10.2f}"
        )
    micro = report.micro
    print(
        f"{'this artifact (micro)':24s}"
        f"{micro.f1:>10.4f}{micro.precision:>12.4f}{micro.recall:>10.4f}"
    )
    print(f"macro F1 {report.macro_f1:.4f}; span F1 {report.span.f1:.4f}")
    if args.out:
        payload = {
            "seed": seed,
            "train_docs": len(train_docs),
            "test_docs": len(test_docs),
            "report": report.to_dict(),
        }
        _write_json(args.out, payload)
        print(f"report written -> {args.out}")
    return 0


def cmd_sweep_baseline(args) -> int:
    cfg = _load_cfg(args)
    seed = _seed_of(args, cfg)
    docs = read_jsonl(args.input)
    default_train = max(1, (len(docs) * 4) // 5)
    train_count = int(resolve(args.train_count, cfg, "train_count", default_train))
    run_seed = derive_run_seed(seed, 0)
    _, test_docs = split(docs, train_count, run_seed)
    generated = generate_instances(test_docs, run_seed)
    sweep = run_baseline_sweep(generated.instances, test_docs, args.thresholds)
    print(f"{'threshold':>10s}{'accuracy':>12s}{'F1 negative':>14s}{'F1 positive':>14s}")
    for i, row in enumerate(sweep.rows):
        marker = " *best" if i == sweep.best_index else ""
        print(
            f"{row.threshold:>10.2f}{row.accuracy:>12.4f}"
            f"{row.f1_negative:>14.4f}{row.f1_positive:>14.4f}{marker}"
        )
    if args.out:
        _write_json(args.out, sweep.to_dict())
        print(f"report written -> {args.out}")
    return 0


def cmd_search(args) -> int:
    cfg = _load_cfg(args)
    docs = read_jsonl(args.corpus)
    query = _structured_query(args)
    if args.scorer == "learned":
        if not args.model or not args.vocab:
            raise ModelError("learned scorer needs --model and --vocab")
        model = LinearModel.load(args.model)
        backend = TfidfBackend(read_vocab_jsonl(args.vocab))
        results = rank(model, query, docs, k=args.k, backend=backend)
        scored = [(r.doc_id, r.score) for r in results]
    elif args.scorer == "keyword":
        keywords = query_keywords(query)
        scored = []
        for doc in docs:
            doc_terms = set(terms(doc.abstract))
            fraction = len(keywords & doc_terms) / len(keywords) if keywords else 0.0
            scored.append((doc.id, fraction))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        scored = scored[: args.k]
    else:
        vocab = read_vocab_jsonl(args.vocab) if args.vocab else build_vocab(docs)
        q = encode_tfidf(query, vocab)
        scored = [
            (doc.id, cosine(q, encode_tfidf(doc.abstract, vocab))) for doc in docs
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        scored = scored[: args.k]
    by_id = {doc.id: doc for doc in docs}
    for position, (doc_id, score_value) in enumerate(scored, start=1):
        print(f"{position:>3d}. {score_value:.6f}  {doc_id}  {by_id[doc_id].title}")
    return 0


def cmd_extract(args) -> int:
    if not args.model:
        raise ModelError("no token classifier loaded: pass --model")
    model = LinearModel.load(args.model)
    token_config = TokenFeatureConfig.from_metadata(model.metadata)
    vocab = None
    if token_config.backend == "onehot":
        if not args.vocab:
            raise ModelError("one-hot token classifier needs --vocab")
        vocab = read_vocab_jsonl(args.vocab)
    tokens = tuple(tokenize(args.text))
    doc = AnnotatedDocument(
        id="adhoc",
        title="",
        abstract=args.text,
        tokens=tokens,
        labels=tuple(PicoLabel.NONE for _ in tokens),
        domain_tag="unknown",
    )
    labels = predict_labels(model, doc, token_config, vocab)
    extraction = extract_document(args.text, tokens, labels)
    if args.json:
        print(json.dumps(extraction_to_dict(extraction), sort_keys=True, indent=2))
        return 0
    for key, spans in (
        ("population", extraction.population),
        ("intervention_comparator", extraction.intervention_comparator),
        ("outcome", extraction.outcome),
    ):
        rendered = ", ".join(span.text for span in spans) if spans else "-"
        print(f"{key}: {rendered}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, create_app

    cfg = _load_cfg(args)
    host = str(resolve(args.host, cfg, "host", DEFAULT_HOST, env_name=ENV_HOST))
    port = int(resolve(args.port, cfg, "port", DEFAULT_PORT, env_name=ENV_PORT))
    settings = ServiceSettings(
        corpus_path=args.corpus,
        vocab_path=args.vocab,
        retrieval_model_path=args.retrieval_model,
        pico_model_path=args.pico_model,
        pico_vocab_path=args.pico_vocab,
    )
    app = create_app(settings)
    print(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly


def _thresholds(raw: str) -> list[float]:
    values = [float(part) for part in raw.split(",") if part.strip()]
    if not values:
        raise ValueError("empty threshold list")
    return values


def build_parser() -> CliParser:
    parser = CliParser(prog="picoengine", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)
    sub.required = True

    p = sub.add_parser("ingest", help="import an annotation release into corpus JSONL")
    p.add_argument("--root", required=True, help="annotation release directory")
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.add_argument("--tier", choices=("expert", "crowd"), default="expert")
    p.add_argument("--report", default=None, help="write skipped-document report JSONL")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="write a synthetic demo corpus")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen-queries", help="generate (query, abstract) instances")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--out", required=True, help="output instances JSONL")
    p.add_argument("--report", default=None, help="write excluded-document report JSONL")
    _add_common(p)
    p.set_defaults(func=cmd_gen_queries)

    p = sub.add_parser("train-retrieval", help="train the pair relevance model")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--vocab-out", default=None, help="output vocabulary JSONL")
    p.add_argument("--backend", choices=("tfidf", "dense"), default="tfidf")
    p.add_argument("--embeddings", default=None, help="embeddings JSONL for the dense backend")
    p.add_argument("--min-df", type=int, default=None)
    _add_hyper(p)
    _add_common(p)
    p.set_defaults(func=cmd_train_retrieval)

    p = sub.add_parser("train-pico", help="train the token classifier")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--vocab-out", default=None, help="output vocabulary JSONL")
    _add_token_features(p)
    _add_hyper(p)
    _add_common(p)
    p.set_defaults(func=cmd_train_pico)

    p = sub.add_parser("eval-retrieval", help="run the repeated retrieval experiment")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--runs", type=int, default=None, help="repetitions (default 5)")
    p.add_argument("--train-count", type=int, default=None, help="documents per training side")
    p.add_argument("--threshold", type=float, default=None, help="decision threshold (default 0.5)")
    p.add_argument("--backend", choices=("tfidf", "dense"), default="tfidf")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--min-df", type=int, default=None)
    p.add_argument("--include-split-ids", action="store_true")
    p.add_argument("--out", default=None, help="write the JSON report here")
    _add_hyper(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("eval-pico", help="train and evaluate the token classifier")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--train-count", type=int, default=None, help="training documents (default: all but 200)")
    p.add_argument("--out", default=None, help="write the JSON report here")
    _add_token_features(p)
    _add_hyper(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval_pico)

    p = sub.add_parser("sweep-baseline", help="sweep the keyword-fraction baseline")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument(
        "--thresholds",
        type=_thresholds,
        default=[round(0.1 * i, 1) for i in range(11)],
        help="comma-separated fractions (default 0,0.1,...,1)",
    )
    p.add_argument("--train-count", type=int, default=None)
    p.add_argument("--out", default=None, help="write the JSON report here")
    _add_common(p)
    p.set_defaults(func=cmd_sweep_baseline)

    p = sub.add_parser("search", help="rank corpus documents for a query")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--query", default=None, help="free-text query")
    p.add_argument("--population", default=None)
    p.add_argument("--intervention", default=None)
    p.add_argument("--comparator", default=None)
    p.add_argument("--outcome", default=None)
    p.add_argument("--scorer", choices=("learned", "keyword", "cosine"), default="cosine")
    p.add_argument("--model", default=None, help="relevance model JSON (learned scorer)")
    p.add_argument("--vocab", default=None, help="vocabulary JSONL")
    p.add_argument("--k", type=int, default=10)
    _add_common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("extract", help="extract PICO spans from raw text")
    p.add_argument("--text", required=True)
    p.add_argument("--model", default=None, help="token classifier model JSON")
    p.add_argument("--vocab", default=None, help="vocabulary JSONL")
    p.add_argument("--json", action="store_true", help="print JSON instead of plain lines")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--vocab", default=None, help="vocabulary JSONL for scoring")
    p.add_argument("--retrieval-model", default=None)
    p.add_argument("--pico-model", default=None)
    p.add_argument("--pico-vocab", default=None)
    p.add_argument("--host", default=None, help=f"bind address (default {DEFAULT_HOST}, env {ENV_HOST})")
    p.add_argument("--port", type=int, default=None, help=f"port (default {DEFAULT_PORT}, env {ENV_PORT})")
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entrypoint(argv: list[str] | None = None) -> int:
    try:
        return main(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    except PicoEngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(entrypoint())
