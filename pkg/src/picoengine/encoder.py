"""Text encoding: tokenizer, vocabulary, TF-IDF vectors, and pair features.

Two interchangeable backends turn a (query, abstract) pair into one feature
vector for the relevance model:

* :class:`TfidfBackend` — deterministic and self-contained. Eight summary
  features (cosine, jaccard, query-term coverage, log lengths, per-clause
  overlap) followed by the element-wise product of the two TF-IDF vectors.
* :class:`DenseBackend` — imported embeddings, combined as
  ``[e(q), e(d), e(q) * e(d), |e(q) - e(d)|]``.

Both sides of a pair are truncated to ``TRUNCATION_LIMIT`` tokens before any
feature is computed.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import template
from .corpus import AnnotatedDocument, Token
from .errors import DataError, MissingEmbedding, SchemaError

#: Maximum tokens considered per input side.
TRUNCATION_LIMIT = 512

# Alphanumeric runs; internal hyphens keep compounds ("iodine-alcohol") whole.
_TOKEN_RE = re.compile(r"[^\W_]+(?:[-‐‑][^\W_]+)*", re.UNICODE)


def tokenize(text: str, limit: int | None = None) -> list[Token]:
    """Split text into word tokens with character offsets.

    Punctuation is split off and dropped; hyphens between alphanumeric runs
    are kept inside one token. Surfaces preserve the original casing; the
    case-folded form is ``Token.term``.
    """
    tokens: list[Token] = []
    for m in _TOKEN_RE.finditer(text):
        tokens.append(Token(surface=m.group(), start=m.start(), end=m.end()))
        if limit is not None and len(tokens) >= limit:
            break
    return tokens


def terms(text: str, limit: int | None = None) -> list[str]:
    """Case-folded token stream of ``text``."""
    return [t.term for t in tokenize(text, limit=limit)]


# ---------------------------------------------------------------------------
# Vocabulary and sparse vectors


@dataclass(frozen=True)
class Vocabulary:
    """Term table: term -> (dense index, document frequency)."""

    entries: dict[str, tuple[int, int]]
    total_docs: int

    @property
    def size(self) -> int:
        return len(self.entries)

    def index_of(self, term: str) -> int | None:
        entry = self.entries.get(term)
        return entry[0] if entry else None

    def idf(self, term: str) -> float:
        """Smoothed inverse document frequency: ln((N+1)/(df+1)) + 1."""
        entry = self.entries.get(term)
        if entry is None:
            return 0.0
        return math.log((self.total_docs + 1) / (entry[1] + 1)) + 1.0


def _doc_text(doc) -> str:
    return doc.abstract if hasattr(doc, "abstract") else str(doc)


def build_vocab(corpus: Iterable, min_df: int = 1) -> Vocabulary:
    """Build a vocabulary over the corpus' abstracts (or raw strings).

    Index assignment is lexicographic, so equal corpora produce equal
    vocabularies regardless of document order.
    """
    df: Counter[str] = Counter()
    total = 0
    for doc in corpus:
        total += 1
        df.update(set(terms(_doc_text(doc))))
    if total == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    kept = sorted(t for t, n in df.items() if n >= min_df)
    entries = {t: (i, df[t]) for i, t in enumerate(kept)}
    return Vocabulary(entries=entries, total_docs=total)


def write_vocab_jsonl(path: str | Path, vocab: Vocabulary) -> None:
    """Dump as JSONL: a {"total_docs": N} header, then {term, index, df} rows."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"total_docs": vocab.total_docs}))
        fh.write("\n")
        for term, (index, df) in sorted(vocab.entries.items(), key=lambda kv: kv[1][0]):
            fh.write(json.dumps({"term": term, "index": index, "df": df}, ensure_ascii=False))
            fh.write("\n")


def read_vocab_jsonl(path: str | Path) -> Vocabulary:
    path = Path(path)
    entries: dict[str, tuple[int, int]] = {}
    total_docs = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "total_docs" in rec:
                total_docs = int(rec["total_docs"])
                continue
            for fieldname in ("term", "index", "df"):
                if fieldname not in rec:
                    raise SchemaError(f"line {lineno}: missing field {fieldname!r}")
            entries[rec["term"]] = (int(rec["index"]), int(rec["df"]))
    if total_docs is None:
        raise SchemaError(f"{path}: missing total_docs header line")
    indices = sorted(i for i, _ in entries.values())
    if indices != list(range(len(entries))):
        raise SchemaError(f"{path}: term indices are not dense 0..{len(entries) - 1}")
    return Vocabulary(entries=entries, total_docs=total_docs)


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) pairs over a fixed dimension."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, finite
    dimension: int

    @classmethod
    def from_pairs(cls, pairs: dict[int, float], dimension: int) -> "SparseVector":
        idx = np.array(sorted(pairs), dtype=np.int64)
        val = np.array([pairs[i] for i in idx], dtype=np.float64)
        return cls(indices=idx, values=val, dimension=dimension)

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> "SparseVector":
        arr = np.asarray(arr, dtype=np.float64)
        nz = np.nonzero(arr)[0]
        return cls(indices=nz.astype(np.int64), values=arr[nz], dimension=arr.shape[0])

    @classmethod
    def zeros(cls, dimension: int) -> "SparseVector":
        return cls(
            indices=np.empty(0, dtype=np.int64),
            values=np.empty(0, dtype=np.float64),
            dimension=dimension,
        )

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def dot(self, other: "SparseVector") -> float:
        if self.dimension != other.dimension:
            raise DataError(
                f"dimension mismatch: {self.dimension} vs {other.dimension}"
            )
        _, ia, ib = np.intersect1d(
            self.indices, other.indices, assume_unique=True, return_indices=True
        )
        return float(np.dot(self.values[ia], other.values[ib]))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def unit(self) -> "SparseVector":
        n = self.norm()
        if n == 0.0:
            return self
        return SparseVector(self.indices, self.values / n, self.dimension)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension, dtype=np.float64)
        out[self.indices] = self.values
        return out


def cosine(a: SparseVector, b: SparseVector) -> float:
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return a.dot(b) / (na * nb)


def _tfidf_from_terms(term_list: list[str], vocab: Vocabulary) -> SparseVector:
    counts: Counter[str] = Counter(term_list)
    weights: dict[int, float] = {}
    for term, tf in counts.items():
        idx = vocab.index_of(term)
        if idx is None:
            continue
        weights[idx] = tf * vocab.idf(term)
    return SparseVector.from_pairs(weights, vocab.size).unit()


def encode_tfidf(
    text: str, vocab: Vocabulary, limit: int | None = TRUNCATION_LIMIT
) -> SparseVector:
    """L2-normalized TF-IDF vector; out-of-vocabulary terms are ignored."""
    return _tfidf_from_terms(terms(text, limit=limit), vocab)


# ---------------------------------------------------------------------------
# Pair features

#: Names of the leading summary features of the TF-IDF backend, in order.
SUMMARY_FEATURE_NAMES = (
    "cosine",
    "jaccard",
    "query_coverage",
    "log_query_len",
    "log_doc_len",
    "population_overlap",
    "intervention_overlap",
    "outcome_overlap",
)
SUMMARY_FEATURE_COUNT = len(SUMMARY_FEATURE_NAMES)


@dataclass(frozen=True)
class PairFeatures:
    """Feature vector for one (query, abstract) pair, tagged by backend."""

    vector: SparseVector
    backend: str


@dataclass
class _TextProfile:
    token_count: int
    term_set: set[str]
    tfidf: SparseVector
    clause_terms: dict | None = None  # PicoLabel -> set[str]; queries only


class TfidfBackend:
    """Deterministic pair encoder over a fixed vocabulary.

    Document profiles are cached by document id and query profiles by exact
    text, so one backend instance must only ever see one corpus.
    """

    name = "tfidf"

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self._doc_cache: dict[str, _TextProfile] = {}
        self._query_cache: dict[str, _TextProfile] = {}

    @property
    def dimension(self) -> int:
        return SUMMARY_FEATURE_COUNT + self.vocab.size

    def _profile(self, text: str) -> _TextProfile:
        toks = terms(text, limit=TRUNCATION_LIMIT)
        return _TextProfile(
            token_count=len(toks),
            term_set=set(toks),
            tfidf=_tfidf_from_terms(toks, self.vocab),
        )

    def doc_profile(self, doc: AnnotatedDocument) -> _TextProfile:
        cached = self._doc_cache.get(doc.id)
        if cached is None:
            cached = self._profile(doc.abstract)
            self._doc_cache[doc.id] = cached
        return cached

    def query_profile(self, query_text: str) -> _TextProfile:
        cached = self._query_cache.get(query_text)
        if cached is None:
            cached = self._profile(query_text)
            cached.clause_terms = {
                label: set(terms(body))
                for label, body in template.parse_clauses(query_text).items()
            }
            self._query_cache[query_text] = cached
        return cached

    def encode_pair(self, query_text: str, doc: AnnotatedDocument) -> PairFeatures:
        qp = self.query_profile(query_text)
        dp = self.doc_profile(doc)

        inter = len(qp.term_set & dp.term_set)
        union = len(qp.term_set | dp.term_set)
        summary = np.zeros(SUMMARY_FEATURE_COUNT, dtype=np.float64)
        summary[0] = qp.tfidf.dot(dp.tfidf)  # both unit or zero
        summary[1] = inter / union if union else 0.0
        summary[2] = inter / len(qp.term_set) if qp.term_set else 0.0
        summary[3] = math.log(1.0 + qp.token_count)
        summary[4] = math.log(1.0 + dp.token_count)
        for offset, label in enumerate(template.CLAUSE_ORDER):
            clause_terms = (qp.clause_terms or {}).get(label)
            if clause_terms:
                summary[5 + offset] = len(clause_terms & dp.term_set) / len(clause_terms)

        qi, di = qp.tfidf, dp.tfidf
        common, ia, ib = np.intersect1d(
            qi.indices, di.indices, assume_unique=True, return_indices=True
        )
        product = qi.values[ia] * di.values[ib]

        nz_summary = np.nonzero(summary)[0]
        indices = np.concatenate(
            [nz_summary, common + SUMMARY_FEATURE_COUNT]
        ).astype(np.int64)
        values = np.concatenate([summary[nz_summary], product])
        vec = SparseVector(indices=indices, values=values, dimension=self.dimension)
        return PairFeatures(vector=vec, backend=self.name)


@dataclass(frozen=True)
class Embeddings:
    """Imported dense vectors keyed by document id or query text."""

    vectors: dict[str, np.ndarray]
    dimension: int | None  # None for an empty import

    def get(self, key: str, kind: str) -> np.ndarray:
        if self.dimension is None:
            raise DataError("embedding map is empty; dimension undefined")
        vec = self.vectors.get(key)
        if vec is None:
            raise MissingEmbedding(key, kind)
        return vec


def load_embeddings(path: str | Path) -> Embeddings:
    """Read a JSONL embedding file of {"id": ..., "vector": [...]} lines."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "id" not in rec or "vector" not in rec:
                raise SchemaError(f"line {lineno}: expected fields 'id' and 'vector'")
            vec = np.asarray(rec["vector"], dtype=np.float64)
            if vec.ndim != 1:
                raise SchemaError(f"line {lineno}: vector must be a flat list")
            if not np.all(np.isfinite(vec)):
                raise SchemaError(f"line {lineno}: vector has non-finite values")
            if dimension is None:
                dimension = int(vec.shape[0])
            elif vec.shape[0] != dimension:
                raise SchemaError(
                    f"line {lineno}: vector length {vec.shape[0]} != {dimension}"
                )
            vectors[str(rec["id"])] = vec
    return Embeddings(vectors=vectors, dimension=dimension)


class DenseBackend:
    """Pair encoder over imported embeddings.

    Documents are looked up by id, queries by their exact text. The pair
    vector is [e(q), e(d), e(q) * e(d), |e(q) - e(d)|].
    """

    name = "dense"

    def __init__(self, embeddings: Embeddings):
        self.embeddings = embeddings

    @property
    def dimension(self) -> int:
        if self.embeddings.dimension is None:
            raise DataError("embedding map is empty; dimension undefined")
        return 4 * self.embeddings.dimension

    def encode_pair(self, query_text: str, doc: AnnotatedDocument) -> PairFeatures:
        eq = self.embeddings.get(query_text, kind="query")
        ed = self.embeddings.get(doc.id, kind="doc id")
        vec = np.concatenate([eq, ed, eq * ed, np.abs(eq - ed)])
        return PairFeatures(vector=SparseVector.from_dense(vec), backend=self.name)


def encode_pair(query_text: str, doc: AnnotatedDocument, backend) -> PairFeatures:
    """Encode one (query, abstract) pair with the given backend."""
    return backend.encode_pair(query_text, doc)
