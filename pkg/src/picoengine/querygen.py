"""Synthetic query generation and (query, abstract) instance sets.

Each eligible document yields four positive instances (queries built from
subsets of its gold PICO spans, paired with the document itself) and four
negative instances (the same query texts paired with distinct randomly
chosen other documents).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import AnnotatedDocument, PicoLabel
from .errors import DataError, MissingElement, SchemaError
from .pico import gold_spans
from .template import CLAUSE_NAMES, CLAUSE_ORDER, render_query, truncate_words

POSITIVE = "positive"
NEGATIVE = "negative"
QUERY_WORD_LIMIT = 512


@dataclass(frozen=True)
class SubsetMask:
    """Which PICO elements a synthetic query includes."""

    include_population: bool
    include_intervention: bool
    include_outcome: bool

    def __post_init__(self):
        if not (
            self.include_population
            or self.include_intervention
            or self.include_outcome
        ):
            raise DataError("subset mask must include at least one element")

    def enabled_labels(self) -> tuple[PicoLabel, ...]:
        flags = {
            PicoLabel.POPULATION: self.include_population,
            PicoLabel.INTERVENTION_COMPARATOR: self.include_intervention,
            PicoLabel.OUTCOME: self.include_outcome,
        }
        return tuple(label for label in CLAUSE_ORDER if flags[label])

    def to_dict(self) -> dict:
        return {
            "population": self.include_population,
            "intervention": self.include_intervention,
            "outcome": self.include_outcome,
        }

    @classmethod
    def from_dict(cls, data) -> "SubsetMask":
        return cls(
            include_population=bool(data["population"]),
            include_intervention=bool(data["intervention"]),
            include_outcome=bool(data["outcome"]),
        )


# The four query shapes generated per document, in emission order.
POSITIVE_MASKS: tuple[SubsetMask, ...] = (
    SubsetMask(True, True, True),
    SubsetMask(True, True, False),
    SubsetMask(False, True, True),
    SubsetMask(True, False, True),
)


@dataclass(frozen=True)
class QueryInstance:
    query_text: str
    source_doc_id: str
    paired_doc_id: str
    relevance: str
    mask: SubsetMask

    def __post_init__(self):
        if self.relevance not in (POSITIVE, NEGATIVE):
            raise DataError(f"unknown relevance {self.relevance!r}")
        positive = self.relevance == POSITIVE
        if positive != (self.paired_doc_id == self.source_doc_id):
            raise DataError(
                "instance is positive exactly when it pairs a query with its own source document"
            )
        if not self.query_text:
            raise DataError("query_text must be non-empty")
        if len(self.query_text.split()) > QUERY_WORD_LIMIT:
            raise DataError(f"query_text exceeds {QUERY_WORD_LIMIT} words")


def is_eligible(doc: AnnotatedDocument) -> bool:
    """True when the document has a gold span of every PICO class."""
    present = set(doc.labels)
    return all(label in present for label in CLAUSE_ORDER)


def synthesize_query(doc: AnnotatedDocument, mask: SubsetMask) -> str:
    """Render the masked gold PICO elements of a document as query text."""
    spans = gold_spans(doc)
    clauses: dict[PicoLabel, list[str]] = {}
    for label in mask.enabled_labels():
        phrases = [span.text for span in spans.by_label(label)]
        if not phrases:
            raise MissingElement(CLAUSE_NAMES[label])
        clauses[label] = phrases
    return truncate_words(render_query(clauses), QUERY_WORD_LIMIT)


@dataclass
class GenerationResult:
    instances: list[QueryInstance]
    excluded: list[tuple[str, str]]  # (doc_id, reason)


def _doc_stream_key(doc_id: str) -> int:
    digest = hashlib.sha256(doc_id.encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def generate_instances(
    corpus: Sequence[AnnotatedDocument], seed: int
) -> GenerationResult:
    """Build 8 instances per eligible document: 4 positive, 4 negative.

    Negative partners are sampled per document from an independent random
    substream keyed on (seed, document id), so results do not depend on
    corpus order and documents can be processed in parallel.
    """
    eligible: list[AnnotatedDocument] = []
    excluded: list[tuple[str, str]] = []
    for doc in corpus:
        if is_eligible(doc):
            eligible.append(doc)
        else:
            present = set(doc.labels)
            missing = [
                CLAUSE_NAMES[label]
                for label in CLAUSE_ORDER
                if label not in present
            ]
            excluded.append((doc.id, f"missing element(s): {', '.join(missing)}"))
    if len(eligible) < 5:
        raise DataError(
            "instance generation needs at least 5 eligible documents "
            f"(gold span of every class), got {len(eligible)}"
        )

    all_ids = sorted(doc.id for doc in corpus)
    position = {doc_id: i for i, doc_id in enumerate(all_ids)}
    instances: list[QueryInstance] = []
    for doc in eligible:
        queries = [synthesize_query(doc, mask) for mask in POSITIVE_MASKS]
        for mask, query in zip(POSITIVE_MASKS, queries):
            instances.append(
                QueryInstance(
                    query_text=query,
                    source_doc_id=doc.id,
                    paired_doc_id=doc.id,
                    relevance=POSITIVE,
                    mask=mask,
                )
            )
        rng = np.random.default_rng([seed, _doc_stream_key(doc.id)])
        # Draw from the id list with the source removed by index shifting.
        drawn = rng.choice(len(all_ids) - 1, size=4, replace=False)
        src = position[doc.id]
        partners = [all_ids[i if i < src else i + 1] for i in drawn]
        for mask, query, partner in zip(POSITIVE_MASKS, queries, partners):
            instances.append(
                QueryInstance(
                    query_text=query,
                    source_doc_id=doc.id,
                    paired_doc_id=partner,
                    relevance=NEGATIVE,
                    mask=mask,
                )
            )
    return GenerationResult(instances=instances, excluded=excluded)


def split(
    corpus: Sequence[AnnotatedDocument], train_count: int, seed: int
) -> tuple[list[AnnotatedDocument], list[AnnotatedDocument]]:
    """Random disjoint train/test partition, deterministic given seed."""
    if not 0 < train_count < len(corpus):
        raise DataError(
            f"train_count must be in 1..{len(corpus) - 1}, got {train_count}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(corpus))
    train = [corpus[i] for i in order[:train_count]]
    test = [corpus[i] for i in order[train_count:]]
    return train, test


def _instance_to_record(instance: QueryInstance) -> dict:
    return {
        "query_text": instance.query_text,
        "source_doc_id": instance.source_doc_id,
        "paired_doc_id": instance.paired_doc_id,
        "relevance": instance.relevance,
        "mask": instance.mask.to_dict(),
    }


def _record_to_instance(record: dict, line_number: int) -> QueryInstance:
    try:
        return QueryInstance(
            query_text=record["query_text"],
            source_doc_id=record["source_doc_id"],
            paired_doc_id=record["paired_doc_id"],
            relevance=record["relevance"],
            mask=SubsetMask.from_dict(record["mask"]),
        )
    except (KeyError, TypeError, DataError) as exc:
        raise SchemaError(f"line {line_number}: bad instance record: {exc}") from exc


def write_instances_jsonl(path, instances: Sequence[QueryInstance]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for instance in instances:
            handle.write(json.dumps(_instance_to_record(instance), sort_keys=True))
            handle.write("\n")


def read_instances_jsonl(path) -> list[QueryInstance]:
    instances: list[QueryInstance] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {line_number}: invalid JSON: {exc}") from exc
            instances.append(_record_to_instance(record, line_number))
    return instances
