"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

LabelKey = Literal["population", "intervention_comparator", "outcome"]


class SearchRequest(BaseModel):
    """Free-text query, or structured PICO fields rendered into one.

    A structured comparator is appended to the intervention clause; the two
    share one class end-to-end.
    """

    free_text: str | None = None
    population: str | None = None
    intervention: str | None = None
    comparator: str | None = None
    outcome: str | None = None
    k: int = Field(default=10, ge=1, le=100)
    scorer: Literal["learned", "keyword", "cosine"] = "learned"

    @model_validator(mode="after")
    def _require_query_content(self):
        fields = (
            self.free_text,
            self.population,
            self.intervention,
            self.comparator,
            self.outcome,
        )
        if not any(value and value.strip() for value in fields):
            raise ValueError(
                "at least one of free_text, population, intervention, "
                "comparator, outcome must be non-empty"
            )
        return self


class SpanModel(BaseModel):
    text: str
    token_start: int
    token_end: int


class HighlightSpan(BaseModel):
    char_start: int = Field(ge=0)
    char_end: int = Field(ge=0)
    label: LabelKey


class ExtractionModel(BaseModel):
    population: list[SpanModel] = Field(default_factory=list)
    intervention_comparator: list[SpanModel] = Field(default_factory=list)
    outcome: list[SpanModel] = Field(default_factory=list)


class SearchHit(BaseModel):
    doc_id: str
    title: str
    abstract: str
    score: float
    rank: int = Field(ge=1)
    extraction: ExtractionModel
    highlight: list[HighlightSpan]


class SearchResponse(BaseModel):
    query_text: str
    scorer: str
    results: list[SearchHit]


class ExtractRequest(BaseModel):
    text: str = Field(min_length=1)


class ExtractResponse(ExtractionModel):
    highlight: list[HighlightSpan] = Field(default_factory=list)


class DocumentResponse(BaseModel):
    doc_id: str
    title: str
    abstract: str
    domain_tag: str


class HealthResponse(BaseModel):
    status: str
    corpus_size: int
    model_versions: dict[str, str | None]
