"""PICO-annotated trial abstract corpora.

Domain types for annotated abstracts, a JSONL interchange format, a
validator, and an importer for the EBM-NLP release layout.

Interchange format: UTF-8 JSONL, one document per line:

    {"id": "...", "title": "...", "abstract": "...",
     "tokens": [{"s": 0, "e": 5}, ...],
     "labels": [0, 1, 1, 0, ...],
     "domain_tag": "unknown"}

Token surfaces are recovered by slicing the abstract at ``[s, e)``, so
documents keep their original casing end to end; any case folding is the
encoder's business, never the corpus'.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable

from .errors import DataError, SchemaError


class PicoLabel(IntEnum):
    """Token-level annotation classes; intervention and comparator share one class."""

    NONE = 0
    POPULATION = 1
    INTERVENTION_COMPARATOR = 2
    OUTCOME = 3


#: Labels that mark actual PICO content (everything but NONE).
CONTENT_LABELS = (
    PicoLabel.POPULATION,
    PicoLabel.INTERVENTION_COMPARATOR,
    PicoLabel.OUTCOME,
)

DOMAIN_TAGS = ("cardiovascular", "autism", "cancer", "unknown")


@dataclass(frozen=True)
class Token:
    """A word token anchored to its character span in the abstract."""

    surface: str
    start: int
    end: int

    @property
    def term(self) -> str:
        """Case-folded form used by the encoder."""
        return self.surface.casefold()


@dataclass(frozen=True)
class PicoSpan:
    """A maximal run of identically labeled tokens, as token indices."""

    label: PicoLabel
    token_start: int
    token_end: int  # exclusive
    text: str


@dataclass(frozen=True)
class AnnotatedDocument:
    id: str
    title: str
    abstract: str
    tokens: tuple[Token, ...]
    labels: tuple[PicoLabel, ...]
    domain_tag: str = "unknown"


def validate(doc: AnnotatedDocument) -> list[str]:
    """Return a description of every invariant violation (empty when well formed)."""
    issues: list[str] = []
    if not doc.id:
        issues.append("id: empty")
    if doc.domain_tag not in DOMAIN_TAGS:
        issues.append(f"domain_tag: {doc.domain_tag!r} not one of {DOMAIN_TAGS}")
    if len(doc.labels) != len(doc.tokens):
        issues.append(
            f"labels: length {len(doc.labels)} != tokens length {len(doc.tokens)}"
        )
    n = len(doc.abstract)
    for i, tok in enumerate(doc.tokens):
        if tok.start >= tok.end:
            issues.append(f"token {i}: start {tok.start} >= end {tok.end}")
            continue
        if tok.start < 0 or tok.end > n:
            issues.append(f"token {i}: span [{tok.start}, {tok.end}) outside abstract")
            continue
        sliced = doc.abstract[tok.start : tok.end]
        if sliced != tok.surface:
            issues.append(
                f"token {i}: surface {tok.surface!r} != abstract slice {sliced!r}"
            )
    for i in range(1, len(doc.tokens)):
        prev, cur = doc.tokens[i - 1], doc.tokens[i]
        if cur.start < prev.end:
            issues.append(f"tokens {i - 1} and {i} overlap or are out of order")
    for i, label in enumerate(doc.labels):
        if not isinstance(label, PicoLabel):
            issues.append(f"label {i}: {label!r} is not a PicoLabel")
    return issues


# ---------------------------------------------------------------------------
# JSONL interchange


def _doc_to_record(doc: AnnotatedDocument) -> dict:
    return {
        "id": doc.id,
        "title": doc.title,
        "abstract": doc.abstract,
        "tokens": [{"s": t.start, "e": t.end} for t in doc.tokens],
        "labels": [int(l) for l in doc.labels],
        "domain_tag": doc.domain_tag,
    }


def _record_to_doc(rec: dict, where: str) -> AnnotatedDocument:
    for field, kind in (
        ("id", str),
        ("title", str),
        ("abstract", str),
        ("tokens", list),
        ("labels", list),
    ):
        if field not in rec:
            raise SchemaError(f"{where}: missing field {field!r}")
        if not isinstance(rec[field], kind):
            raise SchemaError(f"{where}: field {field!r} must be {kind.__name__}")
    tokens = []
    for i, t in enumerate(rec["tokens"]):
        if not isinstance(t, dict) or "s" not in t or "e" not in t:
            raise SchemaError(f"{where}: tokens[{i}] must be an object with 's', 'e'")
        s, e = t["s"], t["e"]
        if not isinstance(s, int) or not isinstance(e, int):
            raise SchemaError(f"{where}: tokens[{i}] offsets must be integers")
        tokens.append(Token(surface=rec["abstract"][s:e], start=s, end=e))
    labels = []
    for i, l in enumerate(rec["labels"]):
        if not isinstance(l, int) or isinstance(l, bool) or not 0 <= l <= 3:
            raise SchemaError(f"{where}: labels[{i}] must be an integer in 0..3")
        labels.append(PicoLabel(l))
    doc = AnnotatedDocument(
        id=rec["id"],
        title=rec["title"],
        abstract=rec["abstract"],
        tokens=tuple(tokens),
        labels=tuple(labels),
        domain_tag=rec.get("domain_tag", "unknown"),
    )
    issues = validate(doc)
    if issues:
        raise SchemaError(f"{where}: {issues[0]}")
    return doc


def write_jsonl(path: str | Path, docs: Iterable[AnnotatedDocument]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(_doc_to_record(doc), ensure_ascii=False))
            fh.write("\n")


def read_jsonl(path: str | Path) -> list[AnnotatedDocument]:
    """Load a corpus, failing with line and field information on bad records."""
    path = Path(path)
    docs: list[AnnotatedDocument] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            doc = _record_to_doc(rec, where=f"line {lineno}")
            if doc.id in seen:
                raise SchemaError(f"line {lineno}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs


# ---------------------------------------------------------------------------
# EBM-NLP style import

#: Per-element annotation directories mapped to the label each collapses to.
ELEMENT_CLASSES = (
    ("participants", PicoLabel.POPULATION),
    ("interventions", PicoLabel.INTERVENTION_COMPARATOR),
    ("outcomes", PicoLabel.OUTCOME),
)

_ANNOTATION_BASES = (
    Path("annotations") / "aggregated" / "starting_spans",
    Path("annotations") / "aggregated" / "hierarchical_labels",
)


@dataclass(frozen=True)
class LoadIssue:
    doc_id: str
    issue: str


@dataclass
class ImportResult:
    documents: list[AnnotatedDocument]
    report: list[LoadIssue]


def write_load_report(path: str | Path, issues: Iterable[LoadIssue]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for issue in issues:
            fh.write(json.dumps({"doc_id": issue.doc_id, "issue": issue.issue}))
            fh.write("\n")


def _align_tokens(abstract: str, token_strings: list[str]) -> list[Token]:
    """Anchor whitespace-free token strings to character offsets, in order."""
    tokens: list[Token] = []
    cursor = 0
    for i, tok in enumerate(token_strings):
        pos = abstract.find(tok, cursor)
        if pos < 0:
            raise DataError(f"token {i} ({tok!r}) not alignable to abstract text")
        tokens.append(Token(surface=tok, start=pos, end=pos + len(tok)))
        cursor = pos + len(tok)
    return tokens


def _find_annotation_file(root: Path, element: str, doc_id: str, tier: str) -> Path | None:
    """Locate the annotation file for one document and element.

    The expert tier lives under ``test/gold``; crowd aggregates live under
    ``train``. ``tier`` states the preference; the other tier is a fallback.
    """
    for base in _ANNOTATION_BASES:
        element_dir = root / base / element
        if not element_dir.is_dir():
            continue
        candidates = sorted(element_dir.rglob(f"{doc_id}.*ann")) + sorted(
            element_dir.rglob(f"{doc_id}.ann")
        )
        if not candidates:
            continue
        expert = [p for p in candidates if "gold" in p.parts]
        crowd = [p for p in candidates if "gold" not in p.parts]
        ordered = expert + crowd if tier == "expert" else crowd + expert
        if ordered:
            return ordered[0]
    return None


def _read_label_row(path: Path) -> list[int]:
    raw = path.read_text(encoding="utf-8").strip()
    if not raw:
        return []
    values = []
    for part in raw.replace("\n", ",").split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(int(part))
        except ValueError as exc:
            raise DataError(f"non-integer annotation value {part!r}") from exc
    return values


def import_ebm_nlp(root_path: str | Path, tier: str = "expert") -> ImportResult:
    """Import a corpus laid out like the EBM-NLP release.

    Expected layout under ``root_path``::

        documents/<id>.text     first line: title, remainder: abstract
        documents/<id>.tokens   whitespace-separated tokens of the abstract
        annotations/aggregated/starting_spans/<element>/<tier...>/<id>.AGGREGATED.ann

    with ``<element>`` one of participants / interventions / outcomes and label
    rows of comma-separated integers, one per token. Any nonzero value (fine
    subtypes included) collapses to the element's class. A malformed document
    is skipped and reported; it never aborts the load.
    """
    root = Path(root_path)
    if tier not in ("expert", "crowd"):
        raise DataError(f"unknown annotation tier {tier!r}")
    docs_dir = root / "documents"
    if not docs_dir.is_dir():
        raise DataError(f"unreadable corpus directory: no {docs_dir}")

    documents: list[AnnotatedDocument] = []
    report: list[LoadIssue] = []
    for text_path in sorted(docs_dir.glob("*.text")):
        doc_id = text_path.stem
        try:
            content = text_path.read_text(encoding="utf-8")
            title, _, rest = content.partition("\n")
            abstract = rest.lstrip("\n").rstrip()
            tokens_path = docs_dir / f"{doc_id}.tokens"
            if not tokens_path.is_file():
                report.append(LoadIssue(doc_id, "missing tokens file"))
                continue
            token_strings = tokens_path.read_text(encoding="utf-8").split()
            tokens = _align_tokens(abstract, token_strings)

            labels = [PicoLabel.NONE] * len(tokens)
            found_any = False
            conflict_noted = False
            for element, cls in ELEMENT_CLASSES:
                ann_path = _find_annotation_file(root, element, doc_id, tier)
                if ann_path is None:
                    report.append(LoadIssue(doc_id, f"missing {element} annotations"))
                    continue
                row = _read_label_row(ann_path)
                if len(row) != len(tokens):
                    raise DataError(
                        f"{element}: {len(row)} labels for {len(tokens)} tokens"
                    )
                found_any = True
                for i, value in enumerate(row):
                    if value == 0:
                        continue
                    if labels[i] is not PicoLabel.NONE:
                        # first element in P, I/C, O order wins on overlap
                        if not conflict_noted:
                            report.append(
                                LoadIssue(
                                    doc_id,
                                    f"overlapping element annotations at token {i}"
                                    " (kept first)",
                                )
                            )
                            conflict_noted = True
                        continue
                    labels[i] = cls
            if not found_any:
                report.append(LoadIssue(doc_id, "no annotation files; labels all none"))

            doc = AnnotatedDocument(
                id=doc_id,
                title=title.strip(),
                abstract=abstract,
                tokens=tuple(tokens),
                labels=tuple(labels),
                domain_tag="unknown",
            )
            issues = validate(doc)
            if issues:
                raise DataError(issues[0])
            documents.append(doc)
        except DataError as exc:
            report.append(LoadIssue(doc_id, f"skipped: {exc}"))
    return ImportResult(documents=documents, report=report)
