"""scikit-learn style front end for the causality analysis."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, validate_data

from .embedding import MethodConfig, causality_matrix
from .series import MultivariateSeries

__all__ = ["MixedEmbeddingCausality"]


class MixedEmbeddingCausality(BaseEstimator):
    """Directed coupling strengths between the columns of a multivariate series.

    Parameters mirror :class:`pmime.embedding.MethodConfig`; ``n_jobs``
    parallelizes over target variables.

    Attributes
    ----------
    causality_matrix_ : ndarray of shape (n_features, n_features)
        ``R[i, j]`` is the strength of column ``i`` driving column ``j``.
    adjacency_ : ndarray of bool
        ``causality_matrix_ > 0``.
    embeddings_ : tuple of EmbeddingVector
        Selected lagged components, one per target column.
    n_features_in_ : int
    feature_names_in_ : ndarray of str
        Only set when ``X`` has string column names.

    Examples
    --------
    >>> from pmime.simulators import gen_henon
    >>> series, truth = gen_henon(3, 0.3, 512, seed=1)
    >>> model = MixedEmbeddingCausality(method="pmime").fit(series.data)
    >>> model.adjacency_.shape
    (3, 3)
    """

    def __init__(
        self,
        method="lm-pmime",
        L=5,
        A=0.95,
        m=2,
        k_nn=5,
        coeffs=None,
        horizon=1,
        tie_jitter_scale=1e-10,
        seed=0,
        stop_rule="chain",
        max_iter=20,
        n_jobs=None,
    ):
        self.method = method
        self.L = L
        self.A = A
        self.m = m
        self.k_nn = k_nn
        self.coeffs = coeffs
        self.horizon = horizon
        self.tie_jitter_scale = tie_jitter_scale
        self.seed = seed
        self.stop_rule = stop_rule
        self.max_iter = max_iter
        self.n_jobs = n_jobs

    def method_config(self) -> MethodConfig:
        return MethodConfig(
            variant=self.method,
            L=self.L,
            A=self.A,
            m=self.m,
            k_nn=self.k_nn,
            coeffs=self.coeffs,
            horizon=self.horizon,
            tie_jitter_scale=self.tie_jitter_scale,
            seed=self.seed,
            stop_rule=self.stop_rule,
            max_iter=self.max_iter,
        )

    def fit(self, X, y=None):
        """Estimate the causality matrix of ``X`` (rows are time samples)."""
        cfg = self.method_config()
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        labels = None
        if hasattr(self, "feature_names_in_"):
            labels = tuple(str(c) for c in self.feature_names_in_)
        series = MultivariateSeries(X, labels)
        result = causality_matrix(series, cfg, n_jobs=self.n_jobs)
        self.causality_matrix_ = result.R
        self.adjacency_ = result.adjacency
        self.embeddings_ = result.embeddings
        self.labels_ = result.labels
        return self

    def edges(self):
        """Detected couplings as ``(driver, target)`` column-index pairs."""
        check_is_fitted(self, "causality_matrix_")
        return [tuple(map(int, p)) for p in np.argwhere(self.adjacency_)]
