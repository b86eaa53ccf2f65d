"""Corpus selection for low-resource language targeting.

Train one-class novelty detectors (RBF one-class SVM, isolation forest,
deep one-class descriptor) on embeddings of a target language, score a
multilingual candidate pool, and select a duration-budgeted subset that
the detectors agree on. All numeric pipelines are deterministic for a
fixed seed; see README.md for the guarantees.
"""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    UtteranceRecord,
    load_binary_embeddings,
    load_durations,
    load_manifest,
    normalized_copy,
    total_duration,
    write_binary_embeddings,
    write_manifest,
)
from .dsvdd import (
    DsvddConfig,
    DsvddModel,
    ae_pretrain,
    dsvdd_decision,
    dsvdd_threshold,
    dsvdd_train,
    fix_center,
)
from .errors import (
    BinaryFormatError,
    DataError,
    DegenerateDataError,
    DivergenceError,
    LingselError,
    ManifestError,
    NumericError,
    UsageError,
)
from .evaluation import (
    ErrorRates,
    evaluate_classifier,
    gen_synthetic_suite,
)
from .iforest import (
    IForestConfig,
    IForestModel,
    iforest_anomaly_score,
    iforest_decision,
    iforest_train,
)
from .numcore import SplitMix64, derive_seed, gamma_scale, rbf_gram
from .ocsvm import OcSvmConfig, OcSvmModel, ocsvm_decision, ocsvm_train
from .selection import (
    ScoredList,
    SelectionConfig,
    SelectionResult,
    rank_pool,
    select_ensemble,
    select_random,
    select_single,
)
from .serde import load_model, save_model

__all__ = [
    "__version__",
    "Corpus",
    "UtteranceRecord",
    "load_manifest",
    "load_binary_embeddings",
    "load_durations",
    "write_manifest",
    "write_binary_embeddings",
    "normalized_copy",
    "total_duration",
    "LingselError",
    "UsageError",
    "DataError",
    "ManifestError",
    "BinaryFormatError",
    "NumericError",
    "DegenerateDataError",
    "DivergenceError",
    "SplitMix64",
    "derive_seed",
    "gamma_scale",
    "rbf_gram",
    "OcSvmConfig",
    "OcSvmModel",
    "ocsvm_train",
    "ocsvm_decision",
    "IForestConfig",
    "IForestModel",
    "iforest_train",
    "iforest_decision",
    "iforest_anomaly_score",
    "DsvddConfig",
    "DsvddModel",
    "ae_pretrain",
    "fix_center",
    "dsvdd_train",
    "dsvdd_decision",
    "dsvdd_threshold",
    "ErrorRates",
    "evaluate_classifier",
    "gen_synthetic_suite",
    "ScoredList",
    "SelectionConfig",
    "SelectionResult",
    "rank_pool",
    "select_ensemble",
    "select_single",
    "select_random",
    "save_model",
    "load_model",
]
