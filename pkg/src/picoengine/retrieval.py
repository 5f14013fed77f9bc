"""Relevance model training, scoring, ranking, and the keyword baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import AnnotatedDocument
from .encoder import PairFeatures, terms
from .errors import ModelError
from .linear import LinearModel, TrainConfig, train_softmax
from .stopwords import STOPWORDS

POSITIVE = "positive"
NEGATIVE = "negative"

#: Decision threshold for turning a relevance probability into a class.
DEFAULT_THRESHOLD = 0.5

# Guards ceil() against float representation error, e.g. 0.3 * 10 -> 3.0000000000000004.
_EPS = 1e-9


@dataclass(frozen=True)
class RankedResult:
    doc_id: str
    score: float
    rank: int  # 1-based


@dataclass
class TrainResult:
    model: LinearModel
    losses: list[float]


def features_to_csr(features: Sequence[PairFeatures]) -> sp.csr_matrix:
    """Stack pair features into one CSR matrix (rows in input order)."""
    if not features:
        raise ModelError("no feature rows to stack")
    dim = features[0].vector.dimension
    indptr = np.zeros(len(features) + 1, dtype=np.int64)
    index_parts = []
    value_parts = []
    for i, pf in enumerate(features):
        if pf.vector.dimension != dim:
            raise ModelError(
                f"inconsistent feature dimensions: {pf.vector.dimension} != {dim}"
            )
        index_parts.append(pf.vector.indices)
        value_parts.append(pf.vector.values)
        indptr[i + 1] = indptr[i] + pf.vector.nnz
    data = np.concatenate(value_parts) if value_parts else np.empty(0)
    indices = np.concatenate(index_parts) if index_parts else np.empty(0, dtype=np.int64)
    return sp.csr_matrix((data, indices, indptr), shape=(len(features), dim))


def train_relevance(
    instances: Sequence[tuple[PairFeatures, str]],
    hyper: TrainConfig,
) -> TrainResult:
    """Train the binary relevance model on labeled (features, relevance) pairs."""
    if not instances:
        raise ModelError("no training instances")
    labels = np.array(
        [1 if rel == POSITIVE else 0 for _, rel in instances], dtype=np.int64
    )
    present = set(labels.tolist())
    if present != {0, 1}:
        missing = NEGATIVE if 0 not in present else POSITIVE
        raise ModelError(f"training data has no {missing} instances")
    X = features_to_csr([pf for pf, _ in instances])
    backend = instances[0][0].backend
    model, losses = train_softmax(
        X,
        labels,
        class_count=2,
        config=hyper,
        metadata={"task": "relevance", "feature_backend": backend},
    )
    return TrainResult(model=model, losses=losses)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def score(model: LinearModel, pair: PairFeatures) -> float:
    """Relevance probability: sigmoid of the positive-vs-negative logit."""
    if model.class_count != 2:
        raise ModelError(f"relevance scoring needs 2 classes, got {model.class_count}")
    if pair.vector.dimension != model.feature_dimension:
        raise ModelError(
            f"feature dimension mismatch: got {pair.vector.dimension}, "
            f"model expects {model.feature_dimension}"
        )
    diff = model.weights[1] - model.weights[0]
    logit = float(np.dot(diff[pair.vector.indices], pair.vector.values))
    logit += float(model.bias[1] - model.bias[0])
    return _sigmoid(logit)


def score_matrix(model: LinearModel, X) -> np.ndarray:
    """Relevance probabilities for stacked feature rows."""
    if model.class_count != 2:
        raise ModelError(f"relevance scoring needs 2 classes, got {model.class_count}")
    return model.predict_proba(X)[:, 1]


def rank(
    model: LinearModel,
    query_text: str,
    corpus: Sequence[AnnotatedDocument],
    k: int,
    backend,
) -> list[RankedResult]:
    """Score every document and return the top ``k``.

    Ordering is score descending with ties broken by ascending doc id;
    ``k`` larger than the corpus returns everything.
    """
    scored = [
        (doc.id, score(model, backend.encode_pair(query_text, doc))) for doc in corpus
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [
        RankedResult(doc_id=doc_id, score=s, rank=i + 1)
        for i, (doc_id, s) in enumerate(scored[:k])
    ]


def query_keywords(query_text: str) -> set[str]:
    """Distinct non-stopword terms of a query."""
    return {t for t in terms(query_text) if t not in STOPWORDS}


def keyword_match_fraction(
    query_text: str, doc: AnnotatedDocument, doc_terms: set[str] | None = None
) -> float:
    """Fraction of the query's distinct keywords present in the abstract."""
    keywords = query_keywords(query_text)
    if not keywords:
        return 0.0
    hay = doc_terms if doc_terms is not None else set(terms(doc.abstract))
    return len(keywords & hay) / len(keywords)


def keyword_retrieve(
    query_text: str,
    corpus: Iterable[AnnotatedDocument],
    threshold: float,
) -> list[str]:
    """Documents containing at least ceil(threshold * |keywords|) query keywords.

    Ordered by matched fraction descending, then doc id.
    """
    keywords = query_keywords(query_text)
    required = max(0, math.ceil(threshold * len(keywords) - _EPS))
    hits: list[tuple[float, str]] = []
    for doc in corpus:
        doc_terms = set(terms(doc.abstract))
        matched = len(keywords & doc_terms)
        if matched >= required:
            fraction = matched / len(keywords) if keywords else 0.0
            hits.append((fraction, doc.id))
    hits.sort(key=lambda pair: (-pair[0], pair[1]))
    return [doc_id for _, doc_id in hits]
