/**
 * Wire types for the engine's HTTP API, mirrored field for field.
 */

export type PicoClass = "population" | "intervention_comparator" | "outcome";

export type Scorer = "learned" | "keyword" | "cosine";

export interface SearchRequest {
  free_text?: string | null;
  population?: string | null;
  intervention?: string | null;
  comparator?: string | null;
  outcome?: string | null;
  k?: number;
  scorer?: Scorer;
}

export interface SpanModel {
  text: string;
  token_start: number;
  token_end: number;
}

export interface HighlightSpan {
  char_start: number;
  char_end: number;
  label: PicoClass;
}

export interface ExtractionModel {
  population: SpanModel[];
  intervention_comparator: SpanModel[];
  outcome: SpanModel[];
}

export interface SearchHit {
  doc_id: string;
  title: string;
  abstract: string;
  score: number;
  rank: number;
  extraction: ExtractionModel;
  highlight: HighlightSpan[];
}

export interface SearchResponse {
  query_text: string;
  scorer: Scorer;
  results: SearchHit[];
}

export interface ExtractRequest {
  text: string;
}

export interface ExtractResponse extends ExtractionModel {
  highlight: HighlightSpan[];
}

export interface DocumentResponse {
  doc_id: string;
  title: string;
  abstract: string;
  domain_tag: string;
}

export interface HealthResponse {
  status: string;
  corpus_size: number;
  model_versions: Record<string, string | null>;
}
