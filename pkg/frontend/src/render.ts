/**
 * Pure HTML-string renderers for results, highlights, the comparison lens,
 * and the extraction pane. Every highlight comes straight from response
 * character offsets; nothing re-derives spans client-side.
 */

import type {
  ExtractionModel,
  ExtractResponse,
  HighlightSpan,
  PicoClass,
  SearchHit,
  SpanModel,
} from "./types.js";

/** Fixed per-class highlight colors; part of the documented UI contract. */
export const CLASS_COLORS: Record<PicoClass, string> = {
  population: "#cce5ff",
  intervention_comparator: "#d4edda",
  outcome: "#ffe5cc",
};

export const CLASS_TITLES: Record<PicoClass, string> = {
  population: "Population",
  intervention_comparator: "Intervention-Comparator",
  outcome: "Outcome",
};

/** Placeholder for a comparison cell whose trial has no spans of that class. */
export const EMPTY_CELL = "—";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export interface HighlightRender {
  html: string;
  violation: boolean;
}

/**
 * Wrap each highlighted character range in a colored <mark>. Offsets that
 * overlap, invert, or fall outside the text violate the API contract; the
 * text then renders plain and the caller logs the violation.
 */
export function renderHighlighted(
  text: string,
  highlight: HighlightSpan[],
): HighlightRender {
  const sorted = [...highlight].sort((a, b) => a.char_start - b.char_start);
  const parts: string[] = [];
  let cursor = 0;
  for (const span of sorted) {
    const color = CLASS_COLORS[span.label];
    const invalid =
      color === undefined ||
      span.char_start < cursor ||
      span.char_end <= span.char_start ||
      span.char_end > text.length;
    if (invalid) {
      return { html: escapeHtml(text), violation: true };
    }
    parts.push(escapeHtml(text.slice(cursor, span.char_start)));
    parts.push(
      `<mark class="pico-${span.label}" style="background:${color}">` +
        escapeHtml(text.slice(span.char_start, span.char_end)) +
        "</mark>",
    );
    cursor = span.char_end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return { html: parts.join(""), violation: false };
}

export function renderHit(hit: SearchHit, selected: boolean): string {
  const { html, violation } = renderHighlighted(hit.abstract, hit.highlight);
  if (violation) {
    console.warn(`contract violation: invalid highlight offsets for ${hit.doc_id}`);
  }
  const classes = selected ? "hit selected" : "hit";
  return (
    `<article class="${classes}" data-doc-id="${escapeHtml(hit.doc_id)}">` +
    `<header><span class="rank">${hit.rank}.</span> ` +
    `<span class="title">${escapeHtml(hit.title)}</span> ` +
    `<span class="score">${hit.score.toFixed(4)}</span></header>` +
    `<p class="abstract">${html}</p>` +
    "</article>"
  );
}

export function renderResults(
  hits: SearchHit[],
  selectedIds: ReadonlySet<string>,
): string {
  if (hits.length === 0) {
    return '<p class="empty">no matching trials</p>';
  }
  return hits.map((hit) => renderHit(hit, selectedIds.has(hit.doc_id))).join("");
}

function cellText(spans: SpanModel[]): string {
  return spans.length > 0 ? spans.map((span) => span.text).join("; ") : EMPTY_CELL;
}

/** One row per trial, columns Population / Intervention-Comparator / Outcome. */
export function renderComparisonTable(hits: SearchHit[]): string {
  const header =
    "<thead><tr><th>Trial</th>" +
    `<th>${CLASS_TITLES.population}</th>` +
    `<th>${CLASS_TITLES.intervention_comparator}</th>` +
    `<th>${CLASS_TITLES.outcome}</th></tr></thead>`;
  const rows = hits
    .map(
      (hit) =>
        `<tr><th scope="row">${escapeHtml(hit.title)}</th>` +
        `<td>${escapeHtml(cellText(hit.extraction.population))}</td>` +
        `<td>${escapeHtml(cellText(hit.extraction.intervention_comparator))}</td>` +
        `<td>${escapeHtml(cellText(hit.extraction.outcome))}</td></tr>`,
    )
    .join("");
  return `<table class="comparison">${header}<tbody>${rows}</tbody></table>`;
}

export function renderExtraction(text: string, response: ExtractResponse): string {
  const { html, violation } = renderHighlighted(text, response.highlight);
  if (violation) {
    console.warn("contract violation: invalid highlight offsets in extraction");
  }
  const lists = (Object.keys(CLASS_TITLES) as PicoClass[])
    .map((label) => {
      const spans = (response as ExtractionModel)[label];
      return (
        `<dt>${CLASS_TITLES[label]}</dt>` +
        `<dd>${escapeHtml(cellText(spans))}</dd>`
      );
    })
    .join("");
  return `<p class="extract-text">${html}</p><dl class="extract-spans">${lists}</dl>`;
}
