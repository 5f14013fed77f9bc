/**
 * View state and its pure transitions. Invariants: the comparison set is a
 * subset of the loaded results and never exceeds five documents; only the
 * newest in-flight search may apply its response (stale ones are ignored).
 */

import type { Scorer, SearchHit, SearchRequest, SearchResponse } from "./types.js";

export const MAX_COMPARISON = 5;

export type Lens = "highlight" | "compare";

export interface ViewState {
  freeText: string;
  population: string;
  intervention: string;
  comparator: string;
  outcome: string;
  scorer: Scorer;
  k: number;
  queryText: string | null;
  results: SearchHit[] | null;
  selected: string[];
  lens: Lens;
  requestToken: number;
  error: string | null;
}

export function createState(): ViewState {
  return {
    freeText: "",
    population: "",
    intervention: "",
    comparator: "",
    outcome: "",
    scorer: "learned",
    k: 10,
    queryText: null,
    results: null,
    selected: [],
    lens: "highlight",
    requestToken: 0,
    error: null,
  };
}

export function canSubmit(state: ViewState): boolean {
  return [
    state.freeText,
    state.population,
    state.intervention,
    state.comparator,
    state.outcome,
  ].some((field) => field.trim().length > 0);
}

export function buildSearchRequest(state: ViewState): SearchRequest {
  const request: SearchRequest = { k: state.k, scorer: state.scorer };
  if (state.freeText.trim()) request.free_text = state.freeText.trim();
  if (state.population.trim()) request.population = state.population.trim();
  if (state.intervention.trim()) request.intervention = state.intervention.trim();
  if (state.comparator.trim()) request.comparator = state.comparator.trim();
  if (state.outcome.trim()) request.outcome = state.outcome.trim();
  return request;
}

/** Claim a new request token; any response carrying an older token is stale. */
export function beginSearch(state: ViewState): ViewState {
  return { ...state, requestToken: state.requestToken + 1, error: null };
}

export function applyResults(
  state: ViewState,
  response: SearchResponse,
  token: number,
): ViewState {
  if (token !== state.requestToken) {
    return state;
  }
  const loaded = new Set(response.results.map((hit) => hit.doc_id));
  return {
    ...state,
    queryText: response.query_text,
    results: response.results,
    selected: state.selected.filter((id) => loaded.has(id)),
    error: null,
  };
}

export function applyError(state: ViewState, message: string, token: number): ViewState {
  if (token !== state.requestToken) {
    return state;
  }
  return { ...state, error: message };
}

export function toggleSelection(state: ViewState, docId: string): ViewState {
  if (state.selected.includes(docId)) {
    return { ...state, selected: state.selected.filter((id) => id !== docId) };
  }
  const loaded = new Set((state.results ?? []).map((hit) => hit.doc_id));
  if (!loaded.has(docId) || state.selected.length >= MAX_COMPARISON) {
    return state;
  }
  return { ...state, selected: [...state.selected, docId] };
}

export function comparisonEnabled(state: ViewState): boolean {
  return state.selected.length >= 2;
}

export function selectedHits(state: ViewState): SearchHit[] {
  const byId = new Map((state.results ?? []).map((hit) => [hit.doc_id, hit]));
  return state.selected
    .map((id) => byId.get(id))
    .filter((hit): hit is SearchHit => hit !== undefined);
}
