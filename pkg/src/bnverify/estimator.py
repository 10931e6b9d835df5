"""scikit-learn style wrapper around a compiled network.

There is nothing to learn from data here: ``fit`` compiles the fixed network
and checks the column layout of ``X``. Columns follow ``network.features``
and hold value indices.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .compiler import DEFAULT_BUDGET, CompilerConfig, compile_network
from .inference import posterior
from .network import ZeroEvidenceError


class DiagramClassifier(ClassifierMixin, BaseEstimator):
    def __init__(self, network=None, threshold=0.5, ordering=None,
                 zero_evidence_class="error", budget=DEFAULT_BUDGET):
        self.network = network
        self.threshold = threshold
        self.ordering = ordering
        self.zero_evidence_class = zero_evidence_class
        self.budget = budget

    def fit(self, X=None, y=None):
        if self.network is None:
            raise ValueError("network is required")
        cfg = CompilerConfig(self.threshold, self.ordering, self.zero_evidence_class, self.budget)
        self.mdd_ = compile_network(self.network, cfg)
        self.feature_names_in_ = np.array(self.network.features, dtype=object)
        self.n_features_in_ = len(self.feature_names_in_)
        self.classes_ = np.array([0, 1])
        if X is not None:
            self._rows(X)
        return self

    def _rows(self, X):
        X = check_array(X, dtype=np.int64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        cards = np.array([self.network.cardinality(f) for f in self.feature_names_in_])
        if (X < 0).any() or (X >= cards).any():
            raise ValueError("value index out of range")
        return X

    def predict(self, X):
        check_is_fitted(self, "mdd_")
        X = self._rows(X)
        names = self.feature_names_in_
        return np.array([self.mdd_.evaluate(dict(zip(names, map(int, row)))) for row in X])

    def predict_proba(self, X):
        """Exact posterior; zero-probability rows get the configured class with certainty."""
        check_is_fitted(self, "mdd_")
        X = self._rows(X)
        p1 = np.empty(len(X))
        for i, row in enumerate(X):
            evidence = dict(zip(self.feature_names_in_, map(int, row)))
            try:
                p1[i] = posterior(self.network, evidence)
            except ZeroEvidenceError:
                if self.zero_evidence_class == "error":
                    raise
                p1[i] = float(self.zero_evidence_class)
        return np.column_stack([1.0 - p1, p1])
