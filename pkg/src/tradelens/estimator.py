"""Scikit-learn style estimator wrapping the window classifier, so the model
composes with pipelines, cross-validation and grid search.

The estimator trains on window arrays directly and performs no feature
scaling of its own; pair it with the data module's normalize() or any sklearn
scaler when features live on different magnitudes.
"""

from __future__ import annotations

from datetime import date, timedelta
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .backproject import Explanation, explain_window
from .data import DatasetSplit, InputWindow, compute_stats
from .training import TrainConfig, build_network, train

__all__ = ["check_window_array", "TradeWindowClassifier"]


def check_window_array(X, window_days: int, n_features: int) -> np.ndarray:
    """Validate and reshape input into an (n_samples, window_days, n_features)
    float64 array. Accepts that shape directly or the flattened 2-D form."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != window_days * n_features:
            raise ValueError(
                "2-D input must have %d columns (window_days * n_features), got %d"
                % (window_days * n_features, X.shape[1])
            )
        X = X.reshape(X.shape[0], window_days, n_features)
    elif X.ndim == 3:
        if X.shape[1:] != (window_days, n_features):
            raise ValueError(
                "3-D input must be (n, %d, %d), got %r"
                % (window_days, n_features, X.shape)
            )
    else:
        raise ValueError("input must be 2-D or 3-D, got %d dims" % X.ndim)
    if X.shape[0] == 0:
        raise ValueError("need at least one sample")
    if not np.isfinite(X).all():
        raise ValueError("input contains NaN or infinity")
    return X


class TradeWindowClassifier(ClassifierMixin, BaseEstimator):
    """Convolutional rise/fall classifier over fixed-size day x feature windows.

    Parameters mirror TrainConfig; `architecture` takes a layer-spec list (see
    tradelens.layers) and defaults to the stock two-stage conv net.
    """

    def __init__(
        self,
        window_days: int = 30,
        n_features: int = 5,
        epochs: int = 15,
        batch_size: int = 32,
        learning_rate: float = 0.05,
        momentum: float = 0.9,
        leaky_slope: float = 0.01,
        seed: int = 0,
        architecture=None,
    ):
        self.window_days = window_days
        self.n_features = n_features
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.leaky_slope = leaky_slope
        self.seed = seed
        self.architecture = architecture

    def fit(self, X, y):
        X = check_window_array(X, self.window_days, self.n_features)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError("y must hold one label per sample")
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes, got %r" % (self.classes_,))
        encoded = np.searchsorted(self.classes_, y)

        cfg = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            seed=self.seed,
            leaky_slope=self.leaky_slope,
            architecture=self.architecture,
            n_states=len(self.classes_),
        )
        origin = date(2000, 1, 3)
        windows = [
            InputWindow(
                values=X[i],
                start_date=origin + timedelta(days=i * self.window_days),
                end_date=origin + timedelta(days=(i + 1) * self.window_days - 1),
                label=int(encoded[i]),
            )
            for i in range(X.shape[0])
        ]
        split = DatasetSplit(windows, [], compute_stats(windows))
        self.network_ = build_network(cfg)
        records = train(self.network_, split, cfg)
        self.loss_curve_ = [r.train_loss for r in records]
        self.n_features_in_ = self.window_days * self.n_features
        return self

    def _require_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError(
                "this %s instance is not fitted yet" % type(self).__name__
            )

    def predict_proba(self, X) -> np.ndarray:
        self._require_fitted()
        X = check_window_array(X, self.window_days, self.n_features)
        return self.network_.predict_proba(X[:, None, :, :])

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[probs.argmax(axis=1)]

    def explain(self, X) -> list[Explanation]:
        """Back-project every sample's per-state responses to the input grid."""
        self._require_fitted()
        X = check_window_array(X, self.window_days, self.n_features)
        return [explain_window(self.network_, X[i]) for i in range(X.shape[0])]
