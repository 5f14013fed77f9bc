"""Deterministic synthetic trial-abstract corpus.

Generates annotated documents shaped like randomized-trial abstracts:
population, intervention-comparator, and outcome phrases drawn from fixed
phrase banks, embedded in unlabeled filler prose. Phrase banks overlap
heavily across documents so keyword matching alone cannot separate pairs
cleanly, while per-document drug/dose/outcome combinations keep learned
scoring and token classification well-posed.

Used by the test harness and for demo corpora; real annotation imports go
through :mod:`picoengine.corpus`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import AnnotatedDocument, PicoLabel
from .encoder import tokenize

_P = PicoLabel.POPULATION
_I = PicoLabel.INTERVENTION_COMPARATOR
_O = PicoLabel.OUTCOME
_N = PicoLabel.NONE

_CONDITIONS = {
    "cardiovascular": (
        "chronic heart failure",
        "atrial fibrillation",
        "acute myocardial infarction",
        "resistant hypertension",
        "stable coronary artery disease",
        "peripheral artery disease",
        "chronic venous insufficiency",
        "dilated cardiomyopathy",
    ),
    "cancer": (
        "locally advanced prostate cancer",
        "metastatic breast cancer",
        "advanced colorectal cancer",
        "non small cell lung cancer",
        "recurrent ovarian carcinoma",
        "diffuse large cell lymphoma",
        "metastatic renal cell carcinoma",
        "early stage melanoma",
    ),
    "autism": (
        "autism spectrum disorder",
        "severe social communication deficits",
        "autism with disruptive behavior",
        "pervasive developmental disorder",
    ),
}

_POPULATION_TEMPLATES = (
    "patients with {c}",
    "adults with {c}",
    "elderly patients with {c}",
    "women with {c}",
    "participants with {c}",
)

_CHILD_TEMPLATES = (
    "children with {c}",
    "adolescents with {c}",
    "school age children with {c}",
)

_DRUGS = (
    "enalapril",
    "metoprolol",
    "amiodarone",
    "rivaroxaban",
    "spironolactone",
    "atorvastatin",
    "clopidogrel",
    "docetaxel",
    "abiraterone",
    "bevacizumab",
    "capecitabine",
    "pembrolizumab",
    "tamoxifen",
    "cisplatin",
    "risperidone",
    "aripiprazole",
    "oxytocin nasal spray",
    "androgen deprivation therapy",
    "radiotherapy",
    "cognitive behavioral therapy",
    "applied behavior analysis",
    "exercise training",
    "dietary counseling",
    "mindfulness training",
)

_INTERVENTION_TEMPLATES = (
    "{a}",
    "{a} plus {b}",
    "{a} versus placebo",
    "high dose {a}",
    "{a} combined with {b}",
    "{a} at {dose} mg daily",
)

_OUTCOMES = (
    "overall survival",
    "progression free survival",
    "all cause mortality",
    "cardiovascular death",
    "hospital readmission rate",
    "left ventricular ejection fraction",
    "exercise capacity",
    "symptom severity score",
    "quality of life score",
    "adverse event rate",
    "treatment response rate",
    "social responsiveness score",
    "repetitive behavior score",
    "disease free survival",
    "stroke incidence",
    "functional independence",
)

# Filler sentences deliberately reuse words that also occur inside pool
# phrases (treatment, survival, score, rate, overall, quality, free, daily),
# so raw keyword counts blur across documents while rare terms stay
# document-specific.
_INTRO_FILLERS = (
    "In this double blind randomized trial of daily treatment we enrolled",
    "This multicenter study of treatment response and survival enrolled",
    "We conducted a pragmatic randomized trial of quality of care enrolling",
    "A prospective evaluation of overall treatment effect enrolled",
)

_ASSIGN_FILLERS = (
    "who were randomly assigned to receive therapy with",
    "allocated in equal proportions to daily",
    "randomized in a two to one ratio to treatment with",
    "assigned within a free standing program to",
)

_ENDPOINT_FILLERS = (
    "The primary endpoint was",
    "The prespecified primary outcome measure was",
    "Efficacy was judged by the rate of change in",
    "Overall efficacy was judged by",
)

_RESULT_FILLERS = (
    "Treatment produced a significant improvement in",
    "The intervention group showed a superior response in",
    "No significant difference in survival or score was observed in",
)

# Decoy sentences mention pool phrases outside any gold span, so other
# documents share query vocabulary without being relevant.
_COMORBIDITY_FILLERS = (
    "Comorbidities included {c} in a minority of participants.",
    "Patients with concurrent {c} were not excluded.",
    "A history of {c} was recorded at baseline.",
)

_PRIOR_THERAPY_FILLERS = (
    "Prior therapy with {d} was permitted before enrollment.",
    "Participants discontinued {d} before randomization.",
    "Concomitant {d} was allowed at a stable dose.",
)

_DECOY_OUTCOME_FILLERS = (
    "Analyses also recorded {x} and {y} among participants.",
    "Registry follow up additionally tracked {x} and {y}.",
    "Exploratory analyses examined {x} together with {y}.",
)

_CLOSING_FILLERS = (
    "Follow up continued for {m} months and adherence remained high.",
    "Event rate monitoring and mortality review continued for {m} months.",
    "Safety was acceptable and quality of life remained stable over {m} months.",
)


def doc_from_segments(
    doc_id: str,
    title: str,
    segments: Sequence[tuple[str, PicoLabel]],
    domain_tag: str = "unknown",
) -> AnnotatedDocument:
    """Build an annotated document from (text, label) segments.

    Segment texts are joined with single spaces; every token whose offset
    falls inside a segment takes that segment's label.
    """
    abstract = " ".join(text for text, _ in segments)
    ranges: list[tuple[int, int, PicoLabel]] = []
    cursor = 0
    for text, label in segments:
        ranges.append((cursor, cursor + len(text), label))
        cursor += len(text) + 1
    tokens = tuple(tokenize(abstract))
    labels = []
    seg = 0
    for token in tokens:
        while seg < len(ranges) and token.start >= ranges[seg][1]:
            seg += 1
        labels.append(ranges[seg][2] if seg < len(ranges) else _N)
    return AnnotatedDocument(
        id=doc_id,
        title=title,
        abstract=abstract,
        tokens=tokens,
        labels=tuple(labels),
        domain_tag=domain_tag,
    )


def _pick(rng: np.random.Generator, pool: Sequence[str]) -> str:
    return pool[int(rng.integers(len(pool)))]


# Documents are generated in small thematic clusters sharing population and
# primary outcome phrases, mimicking how trials on one question accumulate.
# Cluster mates are near-duplicates keyword-wise yet are negatives for each
# other's queries, so threshold rules on keyword fractions stay imperfect.
_CLUSTER_SIZE = 25


def make_doc(index: int, seed: int, eligible: bool = True) -> AnnotatedDocument:
    """One synthetic abstract, deterministic in (seed, index)."""
    cluster_rng = np.random.default_rng([seed, 104729, index // _CLUSTER_SIZE])
    domain = ("cardiovascular", "cancer", "autism")[int(cluster_rng.integers(3))]
    condition = _pick(cluster_rng, _CONDITIONS[domain])
    pop_templates = _CHILD_TEMPLATES if domain == "autism" else _POPULATION_TEMPLATES
    population = _pick(cluster_rng, pop_templates).format(c=condition)
    out_a = _pick(cluster_rng, _OUTCOMES)

    rng = np.random.default_rng([seed, index])
    drug_a, drug_b = (
        _DRUGS[i] for i in rng.choice(len(_DRUGS), size=2, replace=False)
    )
    dose = int(rng.integers(1, 200)) * 5
    intervention = _pick(rng, _INTERVENTION_TEMPLATES).format(
        a=drug_a, b=drug_b, dose=dose
    )
    remaining = [o for o in _OUTCOMES if o != out_a]
    out_b, out_c, out_d = (
        remaining[i] for i in rng.choice(len(remaining), size=3, replace=False)
    )
    months = int(rng.integers(6, 61))

    all_conditions = [c for pool in _CONDITIONS.values() for c in pool]
    decoy_condition = _pick(rng, all_conditions)
    decoy_drug = _pick(rng, _DRUGS)

    segments: list[tuple[str, PicoLabel]] = [
        (_pick(rng, _INTRO_FILLERS), _N),
        (f"{int(rng.integers(40, 900))}", _N),
        (population, _P),
        (_pick(rng, _COMORBIDITY_FILLERS).format(c=decoy_condition), _N),
        (_pick(rng, _ASSIGN_FILLERS), _N),
        (f"{intervention}.", _I),
        (_pick(rng, _PRIOR_THERAPY_FILLERS).format(d=decoy_drug), _N),
    ]
    if eligible:
        segments.append((_pick(rng, _ENDPOINT_FILLERS), _N))
        segments.append((f"{out_a}.", _O))
        segments.append(("Secondary endpoints included", _N))
        segments.append((f"{out_b}.", _O))
        # Repeated outcome mention; gold dedup collapses it later.
        segments.append((_pick(rng, _RESULT_FILLERS), _N))
        segments.append((f"{out_a}.", _O))
    segments.append(
        (_pick(rng, _DECOY_OUTCOME_FILLERS).format(x=out_c, y=out_d), _N)
    )
    segments.append((_pick(rng, _CLOSING_FILLERS).format(m=months), _N))

    return doc_from_segments(
        doc_id=f"synth-{index:05d}",
        title=f"Randomized trial of {intervention} in {population}",
        segments=segments,
        domain_tag=domain,
    )


def make_corpus(
    size: int, seed: int = 0, ineligible_every: int = 0
) -> list[AnnotatedDocument]:
    """A corpus of ``size`` synthetic documents.

    ``ineligible_every`` > 0 drops the outcome spans of every n-th document
    to exercise eligibility filtering; 0 keeps every document eligible.
    """
    docs = []
    for index in range(size):
        eligible = not (ineligible_every and index % ineligible_every == 0)
        docs.append(make_doc(index, seed, eligible=eligible))
    return docs
