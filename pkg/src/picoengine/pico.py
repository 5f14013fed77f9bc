"""Token-level PICO classification and span post-processing.

The classifier is a four-class softmax-regression model over windowed
one-hot token features (or imported per-token vectors). Predicted labels
are merged into maximal same-label runs and deduplicated into the final
population / intervention-comparator / outcome phrases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import (
    CONTENT_LABELS,
    AnnotatedDocument,
    PicoLabel,
    PicoSpan,
    Token,
)
from .encoder import SparseVector, Vocabulary, build_vocab
from .errors import DataError, ModelError
from .evaluation import (
    ClassMetrics,
    EvalReport,
    confusion,
    metrics,
    micro_metrics,
    report_from_matrix,
)
from .linear import LinearModel, TrainConfig, train_softmax

_POSITION_BUCKETS = 10


@dataclass(frozen=True)
class TokenFeatureConfig:
    """Feature layout for the token classifier.

    ``window`` neighbor tokens on each side get their own one-hot block;
    optional casing and bucketed relative-position features follow. The
    dense backend replaces the one-hot blocks with imported per-token
    vectors averaged over the window.
    """

    window: int = 1
    use_casing: bool = True
    use_position: bool = True
    backend: str = "onehot"  # "onehot" | "dense"

    def __post_init__(self):
        if not 0 <= self.window <= 5:
            raise DataError(f"window must be in 0..5, got {self.window}")
        if self.backend not in ("onehot", "dense"):
            raise DataError(f"unknown token feature backend {self.backend!r}")

    def to_metadata(self) -> dict:
        return {
            "window": self.window,
            "use_casing": self.use_casing,
            "use_position": self.use_position,
            "feature_backend": self.backend,
        }

    @classmethod
    def from_metadata(cls, meta: Mapping) -> "TokenFeatureConfig":
        return cls(
            window=int(meta.get("window", 1)),
            use_casing=bool(meta.get("use_casing", True)),
            use_position=bool(meta.get("use_position", True)),
            backend=str(meta.get("feature_backend", "onehot")),
        )


def feature_dimension(
    config: TokenFeatureConfig,
    vocab: Vocabulary | None = None,
    dense_dim: int | None = None,
) -> int:
    if config.backend == "onehot":
        if vocab is None:
            raise ModelError("one-hot token features need a vocabulary")
        base = (2 * config.window + 1) * vocab.size
    else:
        if dense_dim is None:
            raise ModelError("dense token features need the imported dimension")
        base = dense_dim
    if config.use_casing:
        base += 1
    if config.use_position:
        base += _POSITION_BUCKETS
    return base


def _extra_features(
    doc: AnnotatedDocument, index: int, config: TokenFeatureConfig, offset: int
) -> tuple[list[int], list[float]]:
    indices: list[int] = []
    values: list[float] = []
    if config.use_casing:
        if doc.tokens[index].surface[:1].isupper():
            indices.append(offset)
            values.append(1.0)
        offset += 1
    if config.use_position:
        bucket = min(
            _POSITION_BUCKETS - 1, (_POSITION_BUCKETS * index) // len(doc.tokens)
        )
        indices.append(offset + bucket)
        values.append(1.0)
    return indices, values


def token_features(
    doc: AnnotatedDocument,
    index: int,
    config: TokenFeatureConfig,
    vocab: Vocabulary | None = None,
    token_vectors: np.ndarray | None = None,
) -> SparseVector:
    """Feature vector for one token of a document."""
    if not 0 <= index < len(doc.tokens):
        raise DataError(f"token index {index} out of range for {len(doc.tokens)} tokens")
    if config.backend == "dense":
        return _dense_token_features(doc, index, config, token_vectors)
    if vocab is None:
        raise ModelError("one-hot token features need a vocabulary")
    v = vocab.size
    indices: list[int] = []
    values: list[float] = []
    for o in range(-config.window, config.window + 1):
        j = index + o
        if not 0 <= j < len(doc.tokens):
            continue  # no padding token at document edges
        term_index = vocab.index_of(doc.tokens[j].term)
        if term_index is None:
            continue
        indices.append((o + config.window) * v + term_index)
        values.append(1.0)
    base = (2 * config.window + 1) * v
    extra_idx, extra_val = _extra_features(doc, index, config, base)
    indices.extend(extra_idx)
    values.extend(extra_val)
    dim = feature_dimension(config, vocab=vocab)
    return SparseVector(
        indices=np.array(indices, dtype=np.int64),
        values=np.array(values, dtype=np.float64),
        dimension=dim,
    )


def _dense_token_features(
    doc: AnnotatedDocument,
    index: int,
    config: TokenFeatureConfig,
    token_vectors: np.ndarray | None,
) -> SparseVector:
    if token_vectors is None:
        raise ModelError("dense token features need imported per-token vectors")
    if token_vectors.shape[0] != len(doc.tokens):
        raise ModelError(
            f"{token_vectors.shape[0]} token vectors for {len(doc.tokens)} tokens"
        )
    lo = max(0, index - config.window)
    hi = min(len(doc.tokens), index + config.window + 1)
    pooled = token_vectors[lo:hi].mean(axis=0)
    dense_dim = token_vectors.shape[1]
    extra_idx, extra_val = _extra_features(doc, index, config, dense_dim)
    out = np.zeros(feature_dimension(config, dense_dim=dense_dim), dtype=np.float64)
    out[:dense_dim] = pooled
    if extra_idx:
        out[np.array(extra_idx)] = extra_val
    return SparseVector.from_dense(out)


def doc_feature_matrix(
    doc: AnnotatedDocument,
    config: TokenFeatureConfig,
    vocab: Vocabulary | None = None,
    token_vectors: np.ndarray | None = None,
) -> sp.csr_matrix:
    """Stacked token features for a whole document (row i = token i).

    Equivalent to calling :func:`token_features` per token, assembled
    directly as CSR for speed.
    """
    n = len(doc.tokens)
    if config.backend == "dense":
        rows = [
            _dense_token_features(doc, i, config, token_vectors).to_dense()
            for i in range(n)
        ]
        return sp.csr_matrix(np.vstack(rows)) if rows else sp.csr_matrix((0, 1))
    if vocab is None:
        raise ModelError("one-hot token features need a vocabulary")
    v = vocab.size
    dim = feature_dimension(config, vocab=vocab)
    term_indices = [vocab.index_of(t.term) for t in doc.tokens]
    base_extra = (2 * config.window + 1) * v

    indices: list[int] = []
    data: list[float] = []
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        row: list[int] = []
        for o in range(-config.window, config.window + 1):
            j = i + o
            if not 0 <= j < n:
                continue
            ti = term_indices[j]
            if ti is None:
                continue
            row.append((o + config.window) * v + ti)
        extra_idx, _ = _extra_features(doc, i, config, base_extra)
        row.extend(extra_idx)
        indices.extend(row)
        data.extend([1.0] * len(row))
        indptr[i + 1] = len(indices)
    return sp.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), indptr), shape=(n, dim)
    )


@dataclass
class PicoTrainResult:
    model: LinearModel
    losses: list[float]
    vocab: Vocabulary | None


def train_pico(
    train_docs: Sequence[AnnotatedDocument],
    config: TokenFeatureConfig,
    hyper: TrainConfig,
    vocab: Vocabulary | None = None,
    min_df: int = 1,
    token_vectors: Mapping[str, np.ndarray] | None = None,
) -> PicoTrainResult:
    """Train the four-class token classifier on gold-labeled documents."""
    if not train_docs:
        raise DataError("no training documents")
    if config.backend == "onehot" and vocab is None:
        vocab = build_vocab(train_docs, min_df=min_df)

    blocks = []
    label_parts = []
    for doc in train_docs:
        vectors = token_vectors.get(doc.id) if token_vectors else None
        blocks.append(doc_feature_matrix(doc, config, vocab, vectors))
        label_parts.extend(int(l) for l in doc.labels)
    X = sp.vstack([b for b in blocks if b.shape[0] > 0], format="csr")
    y = np.array(label_parts, dtype=np.int64)

    present = set(np.unique(y).tolist())
    missing = [PicoLabel(c).name for c in range(4) if c not in present]
    if missing:
        raise ModelError(f"training data has no tokens of class(es): {', '.join(missing)}")

    meta = {"task": "pico", "vocab_size": vocab.size if vocab else None}
    meta.update(config.to_metadata())
    model, losses = train_softmax(X, y, class_count=4, config=hyper, metadata=meta)
    return PicoTrainResult(model=model, losses=losses, vocab=vocab)


def predict_labels(
    model: LinearModel,
    doc: AnnotatedDocument,
    config: TokenFeatureConfig,
    vocab: Vocabulary | None = None,
    token_vectors: np.ndarray | None = None,
) -> list[PicoLabel]:
    """Argmax class per token; ties resolve to the lowest class value."""
    if model.class_count != 4:
        raise ModelError(f"token classifier needs 4 classes, got {model.class_count}")
    if not doc.tokens:
        return []
    X = doc_feature_matrix(doc, config, vocab, token_vectors)
    return [PicoLabel(int(c)) for c in model.predict(X)]


# ---------------------------------------------------------------------------
# Span merging and deduplication


@dataclass(frozen=True)
class ExtractionResult:
    population: tuple[PicoSpan, ...] = ()
    intervention_comparator: tuple[PicoSpan, ...] = ()
    outcome: tuple[PicoSpan, ...] = ()

    def by_label(self, label: PicoLabel) -> tuple[PicoSpan, ...]:
        return {
            PicoLabel.POPULATION: self.population,
            PicoLabel.INTERVENTION_COMPARATOR: self.intervention_comparator,
            PicoLabel.OUTCOME: self.outcome,
        }[label]

    def is_empty(self) -> bool:
        return not (self.population or self.intervention_comparator or self.outcome)


def label_runs(labels: Sequence[PicoLabel]) -> list[tuple[PicoLabel, int, int]]:
    """Maximal runs of identical non-NONE labels as (label, start, end)."""
    runs: list[tuple[PicoLabel, int, int]] = []
    start = None
    current = PicoLabel.NONE
    for i, label in enumerate(labels):
        if label != current:
            if current is not PicoLabel.NONE and start is not None:
                runs.append((current, start, i))
            start = i if label is not PicoLabel.NONE else None
            current = label
    if current is not PicoLabel.NONE and start is not None:
        runs.append((current, start, len(labels)))
    return runs


def _group_spans(
    runs: list[tuple[PicoLabel, int, int]],
    span_text,
) -> ExtractionResult:
    grouped: dict[PicoLabel, list[PicoSpan]] = {label: [] for label in CONTENT_LABELS}
    seen: dict[PicoLabel, set[str]] = {label: set() for label in CONTENT_LABELS}
    for label, start, end in runs:
        text = span_text(start, end)
        key = text.casefold()
        if key in seen[label]:
            continue  # duplicate phrase; first occurrence wins
        seen[label].add(key)
        grouped[label].append(
            PicoSpan(label=label, token_start=start, token_end=end, text=text)
        )
    return ExtractionResult(
        population=tuple(grouped[PicoLabel.POPULATION]),
        intervention_comparator=tuple(grouped[PicoLabel.INTERVENTION_COMPARATOR]),
        outcome=tuple(grouped[PicoLabel.OUTCOME]),
    )


def extract_spans(
    tokens: Sequence[Token], labels: Sequence[PicoLabel]
) -> ExtractionResult:
    """Merge same-label runs into spans and drop duplicate phrases per class.

    Span text joins token surfaces with single spaces; duplicates compare
    case-insensitively and keep the first occurrence.
    """
    if len(tokens) != len(labels):
        raise DataError(f"{len(labels)} labels for {len(tokens)} tokens")
    return _group_spans(
        label_runs(labels),
        lambda s, e: " ".join(t.surface for t in tokens[s:e]),
    )


def extract_document(
    abstract: str, tokens: Sequence[Token], labels: Sequence[PicoLabel]
) -> ExtractionResult:
    """Like :func:`extract_spans`, but span text quotes the abstract verbatim.

    Text is the exact substring from the first to the last covered token, so
    character highlights derived from a span always reproduce its text.
    """
    if len(tokens) != len(labels):
        raise DataError(f"{len(labels)} labels for {len(tokens)} tokens")
    return _group_spans(
        label_runs(labels),
        lambda s, e: abstract[tokens[s].start : tokens[e - 1].end],
    )


def gold_spans(doc: AnnotatedDocument) -> ExtractionResult:
    """Deduplicated spans from a document's gold labels."""
    return extract_spans(doc.tokens, doc.labels)


def extraction_to_dict(result: ExtractionResult, doc_id: str | None = None) -> dict:
    def spans(seq: tuple[PicoSpan, ...]) -> list[dict]:
        return [
            {"text": s.text, "token_start": s.token_start, "token_end": s.token_end}
            for s in seq
        ]

    out = {
        "population": spans(result.population),
        "intervention_comparator": spans(result.intervention_comparator),
        "outcome": spans(result.outcome),
    }
    if doc_id is not None:
        out = {"doc_id": doc_id, **out}
    return out


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class PicoEvalReport:
    """Token-level report plus headline micro/macro and span-level metrics."""

    token: EvalReport
    micro: ClassMetrics
    macro_f1: float
    span: ClassMetrics

    def to_dict(self) -> dict:
        return {
            "token": self.token.to_dict(),
            "micro": self.micro.to_dict(),
            "macro_f1": self.macro_f1,
            "span": self.span.to_dict(),
        }


def evaluate_pico(
    model: LinearModel,
    test_docs: Sequence[AnnotatedDocument],
    config: TokenFeatureConfig,
    vocab: Vocabulary | None = None,
    token_vectors: Mapping[str, np.ndarray] | None = None,
) -> PicoEvalReport:
    """Token-level micro P/R/F1 over the non-NONE classes, with extras.

    Extras: per-class breakdown, 4x4 confusion, macro F1 over content
    classes, and exact-match span metrics computed on un-deduplicated runs.
    """
    if not test_docs:
        raise DataError("empty test set")
    all_preds: list[int] = []
    all_golds: list[int] = []
    span_tp = span_pred = span_gold = 0
    for doc in test_docs:
        vectors = token_vectors.get(doc.id) if token_vectors else None
        preds = predict_labels(model, doc, config, vocab, vectors)
        all_preds.extend(int(p) for p in preds)
        all_golds.extend(int(g) for g in doc.labels)
        pred_runs = set(label_runs(preds))
        gold_runs = set(label_runs(doc.labels))
        span_tp += len(pred_runs & gold_runs)
        span_pred += len(pred_runs)
        span_gold += len(gold_runs)

    matrix = confusion(all_preds, all_golds, class_count=4)
    token_report = report_from_matrix(matrix)
    micro = micro_metrics(matrix, classes=[int(c) for c in CONTENT_LABELS])
    per_class = metrics(matrix).per_class
    macro_f1 = float(
        np.mean([per_class[int(c)].f1 for c in CONTENT_LABELS])
    )
    span_p = span_tp / span_pred if span_pred else 0.0
    span_r = span_tp / span_gold if span_gold else 0.0
    span_f1 = 2 * span_p * span_r / (span_p + span_r) if span_p + span_r else 0.0
    return PicoEvalReport(
        token=token_report,
        micro=micro,
        macro_f1=macro_f1,
        span=ClassMetrics(precision=span_p, recall=span_r, f1=span_f1),
    )
