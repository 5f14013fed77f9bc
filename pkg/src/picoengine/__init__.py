"""Clinical-trial literature retrieval and PICO evidence extraction.

The pipeline: import or synthesize annotated abstracts, synthesize
(query, abstract) training pairs from gold PICO spans, train a linear
relevance scorer over pair features, rank documents for clinician queries,
and extract population / intervention-comparator / outcome phrases from
abstracts with a token classifier. An HTTP service and a CLI wrap the
library.
"""

from .corpus import (
    AnnotatedDocument,
    PicoLabel,
    PicoSpan,
    Token,
    import_ebm_nlp,
    read_jsonl,
    write_jsonl,
)
from .encoder import (
    DenseBackend,
    PairFeatures,
    SparseVector,
    TfidfBackend,
    Vocabulary,
    build_vocab,
    cosine,
    encode_pair,
    encode_tfidf,
    load_embeddings,
    tokenize,
)
from .errors import (
    DataError,
    MissingElement,
    MissingEmbedding,
    ModelError,
    PicoEngineError,
    SchemaError,
)
from .evaluation import (
    ClassMetrics,
    ConfusionMatrix,
    EvalReport,
    confusion,
    metrics,
    micro_metrics,
)
from .experiments import (
    BaselineSweep,
    ExperimentConfig,
    run_baseline_sweep,
    run_retrieval_experiment,
)
from .linear import LinearModel, TrainConfig, train_softmax
from .pico import (
    ExtractionResult,
    TokenFeatureConfig,
    evaluate_pico,
    extract_document,
    extract_spans,
    predict_labels,
    train_pico,
)
from .querygen import (
    QueryInstance,
    SubsetMask,
    generate_instances,
    split,
    synthesize_query,
)
from .retrieval import (
    RankedResult,
    keyword_retrieve,
    rank,
    score,
    train_relevance,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDocument",
    "BaselineSweep",
    "ClassMetrics",
    "ConfusionMatrix",
    "DataError",
    "DenseBackend",
    "EvalReport",
    "ExperimentConfig",
    "ExtractionResult",
    "LinearModel",
    "MissingElement",
    "MissingEmbedding",
    "ModelError",
    "PairFeatures",
    "PicoEngineError",
    "PicoLabel",
    "PicoSpan",
    "QueryInstance",
    "RankedResult",
    "SchemaError",
    "SparseVector",
    "SubsetMask",
    "TfidfBackend",
    "Token",
    "TokenFeatureConfig",
    "TrainConfig",
    "Vocabulary",
    "build_vocab",
    "confusion",
    "cosine",
    "encode_pair",
    "encode_tfidf",
    "evaluate_pico",
    "extract_document",
    "extract_spans",
    "generate_instances",
    "import_ebm_nlp",
    "keyword_retrieve",
    "load_embeddings",
    "metrics",
    "micro_metrics",
    "predict_labels",
    "rank",
    "read_jsonl",
    "run_baseline_sweep",
    "run_retrieval_experiment",
    "score",
    "split",
    "synthesize_query",
    "tokenize",
    "train_pico",
    "train_relevance",
    "train_softmax",
    "write_jsonl",
    "__version__",
]
