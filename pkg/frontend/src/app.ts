/**
 * DOM shell: wires the form, results pane, comparison lens, and extraction
 * pane to the API client. Keeps a single in-flight search; newer submissions
 * abort the previous request and stale responses are dropped by token.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  renderComparisonTable,
  renderExtraction,
  renderResults,
} from "./render.js";
import {
  applyError,
  applyResults,
  beginSearch,
  buildSearchRequest,
  canSubmit,
  comparisonEnabled,
  createState,
  selectedHits,
  toggleSelection,
  type ViewState,
} from "./state.js";

const DEFAULT_BASE_URL = "http://127.0.0.1:8080";

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing element #${id}`);
  return element as T;
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  if (error instanceof Error) return error.message;
  return String(error);
}

export function initApp(): void {
  const client = new ApiClient(DEFAULT_BASE_URL);
  let state: ViewState = createState();
  let inflight: AbortController | null = null;

  const baseUrlInput = byId<HTMLInputElement>("base-url");
  const form = byId<HTMLFormElement>("search-form");
  const freeText = byId<HTMLInputElement>("free-text");
  const population = byId<HTMLInputElement>("population");
  const intervention = byId<HTMLInputElement>("intervention");
  const comparator = byId<HTMLInputElement>("comparator");
  const outcome = byId<HTMLInputElement>("outcome");
  const scorer = byId<HTMLSelectElement>("scorer");
  const submit = byId<HTMLButtonElement>("submit");
  const errorBanner = byId<HTMLElement>("error-banner");
  const queryEcho = byId<HTMLElement>("query-echo");
  const resultsPane = byId<HTMLElement>("results");
  const comparePane = byId<HTMLElement>("comparison");
  const extractForm = byId<HTMLFormElement>("extract-form");
  const extractInput = byId<HTMLTextAreaElement>("extract-text");
  const extractPane = byId<HTMLElement>("extraction");

  baseUrlInput.value = DEFAULT_BASE_URL;
  baseUrlInput.addEventListener("change", () => {
    client.setBaseUrl(baseUrlInput.value.trim() || DEFAULT_BASE_URL);
  });

  function readForm(): void {
    state = {
      ...state,
      freeText: freeText.value,
      population: population.value,
      intervention: intervention.value,
      comparator: comparator.value,
      outcome: outcome.value,
      scorer: scorer.value as ViewState["scorer"],
    };
  }

  function redraw(): void {
    submit.disabled = !canSubmit(state);
    errorBanner.textContent = state.error ?? "";
    errorBanner.hidden = state.error === null;
    queryEcho.textContent = state.queryText ?? "";
    if (state.results !== null) {
      resultsPane.innerHTML = renderResults(state.results, new Set(state.selected));
    }
    if (comparisonEnabled(state)) {
      comparePane.innerHTML = renderComparisonTable(selectedHits(state));
      comparePane.hidden = false;
    } else {
      comparePane.innerHTML = "";
      comparePane.hidden = true;
    }
  }

  for (const input of [freeText, population, intervention, comparator, outcome]) {
    input.addEventListener("input", () => {
      readForm();
      submit.disabled = !canSubmit(state);
    });
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    readForm();
    if (!canSubmit(state)) return;
    state = beginSearch(state);
    const token = state.requestToken;
    inflight?.abort();
    inflight = new AbortController();
    redraw();
    client
      .search(buildSearchRequest(state), inflight.signal)
      .then((response) => {
        state = applyResults(state, response, token);
        redraw();
      })
      .catch((error: unknown) => {
        if (error instanceof DOMException && error.name === "AbortError") return;
        state = applyError(state, describeError(error), token);
        redraw();
      });
  });

  resultsPane.addEventListener("click", (event) => {
    const article = (event.target as HTMLElement).closest("article[data-doc-id]");
    if (!article) return;
    const docId = article.getAttribute("data-doc-id");
    if (!docId) return;
    state = toggleSelection(state, docId);
    redraw();
  });

  extractForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = extractInput.value;
    if (!text.trim()) return;
    client
      .extract({ text })
      .then((response) => {
        extractPane.innerHTML = renderExtraction(text, response);
      })
      .catch((error: unknown) => {
        extractPane.textContent = describeError(error);
      });
  });

  redraw();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", initApp);
}
