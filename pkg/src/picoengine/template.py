"""The labeled-clause query template shared by query synthesis and encoding.

Queries are rendered as::

    population: <phrases>; intervention: <phrases>; outcome: <phrases>

with clauses in fixed P, I/C, O order, omitted when disabled or empty, and
phrases joined with ", ". The template is deterministic and invertible, so
encoders can recover per-clause terms from a rendered query.
"""

from __future__ import annotations

import re
from typing import Mapping, Sequence

from .corpus import PicoLabel

CLAUSE_ORDER = (
    PicoLabel.POPULATION,
    PicoLabel.INTERVENTION_COMPARATOR,
    PicoLabel.OUTCOME,
)

CLAUSE_NAMES = {
    PicoLabel.POPULATION: "population",
    PicoLabel.INTERVENTION_COMPARATOR: "intervention",
    PicoLabel.OUTCOME: "outcome",
}

_NAME_TO_LABEL = {name: label for label, name in CLAUSE_NAMES.items()}

_CLAUSE_MARKER = re.compile(r"\b(population|intervention|outcome)\s*:", re.IGNORECASE)


def render_query(clauses: Mapping[PicoLabel, Sequence[str]]) -> str:
    """Render non-empty clauses in P, I/C, O order."""
    parts = []
    for label in CLAUSE_ORDER:
        phrases = [p for p in clauses.get(label, ()) if p]
        if phrases:
            parts.append(f"{CLAUSE_NAMES[label]}: {', '.join(phrases)}")
    return "; ".join(parts)


def parse_clauses(query_text: str) -> dict[PicoLabel, str]:
    """Recover clause bodies from a rendered query.

    Free text without clause markers parses to an empty mapping. Repeated
    markers of the same clause keep the first occurrence.
    """
    matches = list(_CLAUSE_MARKER.finditer(query_text))
    clauses: dict[PicoLabel, str] = {}
    for i, m in enumerate(matches):
        label = _NAME_TO_LABEL[m.group(1).lower()]
        if label in clauses:
            continue
        end = matches[i + 1].start() if i + 1 < len(matches) else len(query_text)
        body = query_text[m.end() : end].strip().rstrip(";").strip()
        if body:
            clauses[label] = body
    return clauses


def truncate_words(text: str, limit: int) -> str:
    """Keep at most ``limit`` whitespace-separated words."""
    words = text.split()
    if len(words) <= limit:
        return text
    return " ".join(words[:limit])
