"""Shared fixtures: a deterministic synthetic corpus and handmade documents."""

from __future__ import annotations

import pytest

from picoengine.corpus import AnnotatedDocument, PicoLabel
from picoengine.synth import doc_from_segments, make_corpus


def build_doc(
    doc_id: str,
    population: str,
    intervention: str,
    outcomes: tuple[str, ...],
    domain_tag: str = "unknown",
) -> AnnotatedDocument:
    """A small hand-assembled trial abstract with known span boundaries."""
    segments: list[tuple[str, PicoLabel]] = [
        ("We enrolled", PicoLabel.NONE),
        (population, PicoLabel.POPULATION),
        ("randomly assigned to", PicoLabel.NONE),
        (f"{intervention}.", PicoLabel.INTERVENTION_COMPARATOR),
        ("The primary outcome was", PicoLabel.NONE),
        (f"{outcomes[0]}.", PicoLabel.OUTCOME),
    ]
    for phrase in outcomes[1:]:
        segments.append(("Secondary endpoints included", PicoLabel.NONE))
        segments.append((f"{phrase}.", PicoLabel.OUTCOME))
    segments.append(("Follow up lasted twelve months.", PicoLabel.NONE))
    return doc_from_segments(
        doc_id=doc_id,
        title=f"Trial of {intervention}",
        segments=segments,
        domain_tag=domain_tag,
    )


CLINIC_SPECS: tuple[tuple[str, str, str, tuple[str, ...]], ...] = (
    (
        "prostate-fixture",
        "patients with locally advanced prostate cancer",
        "docetaxel plus prednisone",
        ("overall survival", "prostate specific antigen response"),
    ),
    (
        "heart-01",
        "adults with chronic heart failure",
        "metoprolol versus placebo",
        ("cardiovascular mortality", "six minute walk distance"),
    ),
    (
        "asthma-01",
        "children with persistent asthma",
        "inhaled budesonide",
        ("asthma exacerbation rate", "lung function decline"),
    ),
    (
        "diabetes-01",
        "adults with type two diabetes",
        "metformin plus lifestyle counseling",
        ("glycated hemoglobin level", "body weight change"),
    ),
    (
        "migraine-01",
        "women with chronic migraine",
        "topiramate versus amitriptyline",
        ("monthly headache days", "quality of life score"),
    ),
    (
        "stroke-01",
        "elderly patients with ischemic stroke",
        "alteplase infusion",
        ("functional independence", "intracranial hemorrhage rate"),
    ),
    (
        "depression-01",
        "adolescents with major depression",
        "fluoxetine plus cognitive therapy",
        ("depression severity score", "remission rate"),
    ),
    (
        "arthritis-01",
        "adults with rheumatoid arthritis",
        "methotrexate versus sulfasalazine",
        ("joint swelling count", "disease activity score"),
    ),
    (
        "copd-01",
        "smokers with moderate airflow obstruction",
        "tiotropium inhaler",
        ("exacerbation frequency", "exercise capacity"),
    ),
)


@pytest.fixture(scope="session")
def clinic_corpus() -> list[AnnotatedDocument]:
    """Nine handmade eligible documents on distinct clinical questions."""
    return [build_doc(*spec) for spec in CLINIC_SPECS]


@pytest.fixture(scope="session")
def small_corpus() -> list[AnnotatedDocument]:
    """The 200-document synthetic fixture used across retrieval tests."""
    return make_corpus(200, seed=0)
