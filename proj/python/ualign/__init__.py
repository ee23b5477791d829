"""Python bindings for the ualign pipeline."""

from ualign._core import (
    ConfigError,
    Error,
    LoadError,
    PrerequisiteError,
    UndefinedMetricError,
    ValidationError,
    __version__,
    auroc,
    categorize,
    cluster_sizes,
    confidence,
    is_refusal,
    normalize_answer,
    precision,
    prem_match,
    print_config,
    read_dataset,
    run_all,
    run_stage,
    semantic_entropy,
    truthfulness,
)

__all__ = [
    "ConfigError",
    "Error",
    "LoadError",
    "PrerequisiteError",
    "UndefinedMetricError",
    "ValidationError",
    "__version__",
    "auroc",
    "categorize",
    "cluster_sizes",
    "confidence",
    "is_refusal",
    "normalize_answer",
    "precision",
    "prem_match",
    "print_config",
    "read_dataset",
    "run_all",
    "run_stage",
    "semantic_entropy",
    "truthfulness",
]
