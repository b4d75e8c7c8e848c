"""Directed coupling detection in multivariate time series by mixed embedding.

Implements PMIME (greedy non-uniform embedding scored by conditional mutual
information), M-PMIME (exhaustive subset traversal for the first ``m``
iterations) and LM-PMIME (traversal followed by a low-dimensional
approximation of the conditional mutual information).
"""

__version__ = "0.1.0"

from .embedding import (  # noqa: E402
    CausalityResult,
    EmbeddingVector,
    MethodConfig,
    Variant,
    build_embedding,
    causality_index,
    causality_matrix,
)
from .estimator import MixedEmbeddingCausality  # noqa: E402
from .evaluation import BatchSummary, ConfusionCounts, metrics, run_batch, run_batches, score_matrix  # noqa: E402
from .exceptions import PMIMEError  # noqa: E402
from .knn import EstimatorConfig, conditional_mutual_information, mutual_information  # noqa: E402
from .series import LaggedVariable, MultivariateSeries, read_csv, write_csv  # noqa: E402
from .simulators import (  # noqa: E402
    GroundTruth,
    SystemKind,
    SystemSpec,
    gen_henon,
    gen_lorenz3,
    gen_nlvar3,
    gen_var5,
    generate,
)

__all__ = [
    "BatchSummary",
    "CausalityResult",
    "ConfusionCounts",
    "EmbeddingVector",
    "EstimatorConfig",
    "GroundTruth",
    "LaggedVariable",
    "MethodConfig",
    "MixedEmbeddingCausality",
    "MultivariateSeries",
    "PMIMEError",
    "SystemKind",
    "SystemSpec",
    "Variant",
    "build_embedding",
    "causality_index",
    "causality_matrix",
    "conditional_mutual_information",
    "gen_henon",
    "gen_lorenz3",
    "gen_nlvar3",
    "gen_var5",
    "generate",
    "metrics",
    "mutual_information",
    "read_csv",
    "run_batch",
    "run_batches",
    "score_matrix",
    "write_csv",
]
