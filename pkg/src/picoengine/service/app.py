"""HTTP service: ranked search, ad-hoc extraction, document lookup.

All state (corpus, vocabulary, models) is loaded once at startup and never
mutated afterwards; identical requests return identical bodies. Training
happens offline through the CLI.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..corpus import CONTENT_LABELS, AnnotatedDocument, PicoLabel, read_jsonl
from ..encoder import (
    TfidfBackend,
    Vocabulary,
    build_vocab,
    cosine,
    encode_tfidf,
    read_vocab_jsonl,
    tokenize,
)
from ..errors import DataError, ModelError, PicoEngineError
from ..linear import LinearModel
from ..pico import (
    ExtractionResult,
    TokenFeatureConfig,
    extract_document,
    predict_labels,
)
from ..retrieval import query_keywords, rank
from ..template import render_query
from .schemas import (
    DocumentResponse,
    ExtractRequest,
    ExtractResponse,
    ExtractionModel,
    HealthResponse,
    HighlightSpan,
    SearchHit,
    SearchRequest,
    SearchResponse,
    SpanModel,
)

_LABEL_KEYS = {
    PicoLabel.POPULATION: "population",
    PicoLabel.INTERVENTION_COMPARATOR: "intervention_comparator",
    PicoLabel.OUTCOME: "outcome",
}


@dataclass
class ServiceSettings:
    corpus_path: str
    vocab_path: str | None = None
    retrieval_model_path: str | None = None
    pico_model_path: str | None = None
    pico_vocab_path: str | None = None


def _file_version(path: str) -> str:
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return digest[:12]


class EngineState:
    """Immutable artifacts shared by all request handlers."""

    def __init__(self, settings: ServiceSettings):
        self.documents: list[AnnotatedDocument] = read_jsonl(settings.corpus_path)
        if not self.documents:
            raise DataError(f"corpus {settings.corpus_path} is empty")
        self.by_id = {doc.id: doc for doc in self.documents}

        if settings.vocab_path:
            self.vocab: Vocabulary = read_vocab_jsonl(settings.vocab_path)
        else:
            self.vocab = build_vocab(self.documents)
        self.backend = TfidfBackend(self.vocab)

        self.versions: dict[str, str | None] = {"retrieval": None, "pico": None}
        self.retrieval_model: LinearModel | None = None
        if settings.retrieval_model_path:
            self.retrieval_model = LinearModel.load(settings.retrieval_model_path)
            self.versions["retrieval"] = _file_version(settings.retrieval_model_path)

        self.pico_model: LinearModel | None = None
        self.pico_config: TokenFeatureConfig | None = None
        self.pico_vocab: Vocabulary | None = None
        if settings.pico_model_path:
            self.pico_model = LinearModel.load(settings.pico_model_path)
            self.pico_config = TokenFeatureConfig.from_metadata(self.pico_model.metadata)
            self.versions["pico"] = _file_version(settings.pico_model_path)
            if settings.pico_vocab_path:
                self.pico_vocab = read_vocab_jsonl(settings.pico_vocab_path)
            elif self.pico_config.backend == "onehot":
                raise DataError("token classifier with one-hot features needs its vocabulary file")

    def labels_for(self, doc: AnnotatedDocument) -> Sequence[PicoLabel]:
        """Predicted labels when a token classifier is loaded, else gold."""
        if self.pico_model is not None and self.pico_config is not None:
            return predict_labels(self.pico_model, doc, self.pico_config, self.pico_vocab)
        return doc.labels


def _payloads(
    result: ExtractionResult, tokens
) -> tuple[ExtractionModel, list[HighlightSpan]]:
    highlights: list[HighlightSpan] = []
    lists: dict[str, list[SpanModel]] = {}
    for label in CONTENT_LABELS:
        key = _LABEL_KEYS[label]
        spans = result.by_label(label)
        lists[key] = [
            SpanModel(text=s.text, token_start=s.token_start, token_end=s.token_end)
            for s in spans
        ]
        for s in spans:
            highlights.append(
                HighlightSpan(
                    char_start=tokens[s.token_start].start,
                    char_end=tokens[s.token_end - 1].end,
                    label=key,
                )
            )
    highlights.sort(key=lambda h: h.char_start)
    return ExtractionModel(**lists), highlights


def _query_text(request: SearchRequest) -> str:
    if request.free_text and request.free_text.strip():
        return request.free_text
    clauses: dict[PicoLabel, list[str]] = {}
    if request.population and request.population.strip():
        clauses[PicoLabel.POPULATION] = [request.population.strip()]
    intervention_parts = [
        part.strip()
        for part in (request.intervention, request.comparator)
        if part and part.strip()
    ]
    if intervention_parts:
        clauses[PicoLabel.INTERVENTION_COMPARATOR] = intervention_parts
    if request.outcome and request.outcome.strip():
        clauses[PicoLabel.OUTCOME] = [request.outcome.strip()]
    return render_query(clauses)


def _keyword_scores(
    query_text: str, documents: Sequence[AnnotatedDocument], backend: TfidfBackend
) -> list[tuple[str, float]]:
    keywords = query_keywords(query_text)
    scores = []
    for doc in documents:
        doc_terms = backend.doc_profile(doc).term_set
        fraction = len(keywords & doc_terms) / len(keywords) if keywords else 0.0
        scores.append((doc.id, fraction))
    return scores


def create_app(settings: ServiceSettings) -> FastAPI:
    state = EngineState(settings)
    app = FastAPI(title="picoengine", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        detail = [
            {
                "field": ".".join(str(part) for part in err.get("loc", ())),
                "message": err.get("msg", "invalid value"),
            }
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.exception_handler(PicoEngineError)
    async def _on_engine_error(request: Request, exc: PicoEngineError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            corpus_size=len(state.documents),
            model_versions=dict(state.versions),
        )

    @app.get("/documents/{doc_id}", response_model=DocumentResponse)
    def get_document(doc_id: str) -> DocumentResponse:
        doc = state.by_id.get(doc_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"unknown document id {doc_id!r}")
        return DocumentResponse(
            doc_id=doc.id,
            title=doc.title,
            abstract=doc.abstract,
            domain_tag=doc.domain_tag,
        )

    @app.post("/search", response_model=SearchResponse)
    def search(request: SearchRequest) -> SearchResponse:
        query_text = _query_text(request)
        if request.scorer == "learned":
            if state.retrieval_model is None:
                raise HTTPException(
                    status_code=400,
                    detail="learned scorer unavailable: no retrieval model loaded",
                )
            ranked = rank(
                state.retrieval_model,
                query_text,
                state.documents,
                k=request.k,
                backend=state.backend,
            )
            scored = [(r.doc_id, r.score) for r in ranked]
        elif request.scorer == "keyword":
            scored = _keyword_scores(query_text, state.documents, state.backend)
            scored.sort(key=lambda pair: (-pair[1], pair[0]))
            scored = scored[: request.k]
        else:  # cosine
            q = encode_tfidf(query_text, state.vocab)
            scored = [
                (doc.id, cosine(q, state.backend.doc_profile(doc).tfidf))
                for doc in state.documents
            ]
            scored.sort(key=lambda pair: (-pair[1], pair[0]))
            scored = scored[: request.k]

        results = []
        for position, (doc_id, score_value) in enumerate(scored, start=1):
            doc = state.by_id[doc_id]
            labels = state.labels_for(doc)
            extraction = extract_document(doc.abstract, doc.tokens, labels)
            extraction_model, highlights = _payloads(extraction, doc.tokens)
            results.append(
                SearchHit(
                    doc_id=doc.id,
                    title=doc.title,
                    abstract=doc.abstract,
                    score=float(score_value),
                    rank=position,
                    extraction=extraction_model,
                    highlight=highlights,
                )
            )
        return SearchResponse(
            query_text=query_text, scorer=request.scorer, results=results
        )

    @app.post("/extract", response_model=ExtractResponse)
    def extract(request: ExtractRequest) -> ExtractResponse:
        if state.pico_model is None or state.pico_config is None:
            raise HTTPException(
                status_code=503, detail="no token classifier loaded"
            )
        tokens = tuple(tokenize(request.text))
        doc = AnnotatedDocument(
            id="adhoc",
            title="",
            abstract=request.text,
            tokens=tokens,
            labels=tuple(PicoLabel.NONE for _ in tokens),
            domain_tag="unknown",
        )
        labels = predict_labels(state.pico_model, doc, state.pico_config, state.pico_vocab)
        extraction = extract_document(request.text, tokens, labels)
        extraction_model, highlights = _payloads(extraction, tokens)
        return ExtractResponse(
            population=extraction_model.population,
            intervention_comparator=extraction_model.intervention_comparator,
            outcome=extraction_model.outcome,
            highlight=highlights,
        )

    return app
