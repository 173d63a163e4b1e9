"""Scikit-learn style estimator wrappers.

Both estimators follow the fit/predict/get_params protocol so they compose
with pipelines, cross-validation and grid search.  An intercept column is
only added when fit_intercept is set; nothing is standardized implicitly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import model as _model
from .embeddings import (
    Activation,
    ols_embedding,
    pcr_embedding,
    ridge_embedding,
)
from .model import AttRegConfig

__all__ = ["LinearAttentionRegressor", "AttentionRegressor"]


def _maybe_add_intercept(X, fit_intercept):
    if fit_intercept:
        return np.column_stack([np.ones(X.shape[0]), X])
    return X


class LinearAttentionRegressor(BaseEstimator, RegressorMixin):
    """Linear attention predictor with a fixed (OLS, ridge or PCR) embedding.

    Parameters
    ----------
    embedding : {"ols", "ridge", "pcr"}
    penalty : ridge penalty, used when embedding="ridge"
    n_components : retained components, used when embedding="pcr"
    activation : {"identity", "softmax", "normalized_relu", "normalized_elu"}
    temperature : score divisor applied before the activation
    elu_scale : negative-branch scale of the ELU activation
    fit_intercept : prepend a constant column before fitting
    """

    def __init__(self, embedding="ols", penalty=1.0, n_components=1,
                 activation="identity", temperature=1.0, elu_scale=1.0,
                 fit_intercept=False):
        self.embedding = embedding
        self.penalty = penalty
        self.n_components = n_components
        self.activation = activation
        self.temperature = temperature
        self.elu_scale = elu_scale
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        Xd = _maybe_add_intercept(X, self.fit_intercept)
        if self.embedding == "ols":
            self.omega_ = ols_embedding(Xd)
        elif self.embedding == "ridge":
            self.omega_ = ridge_embedding(Xd, self.penalty)
        elif self.embedding == "pcr":
            self.omega_ = pcr_embedding(Xd, self.n_components)
        else:
            raise ValueError(f"unknown embedding {self.embedding!r}")
        self.activation_ = Activation(kind=self.activation,
                                      temperature=self.temperature,
                                      elu_scale=self.elu_scale)
        self.X_train_ = Xd
        self.y_train_ = np.asarray(y, dtype=float)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "X_train_")
        X = check_array(X)
        Xd = _maybe_add_intercept(X, self.fit_intercept)
        from .embeddings import linear_attention_predict

        return linear_attention_predict(Xd, self.X_train_, self.y_train_,
                                        self.omega_, self.activation_)


class AttentionRegressor(BaseEstimator, RegressorMixin):
    """Multi-head attention regression with trained similarity metrics."""

    def __init__(self, heads=5, ridge_penalty=1e-3, init_noise_scale=0.01,
                 max_iterations=500, improvement_tol=1e-6, patience=10,
                 diagonal_mask=False, seed=0):
        self.heads = heads
        self.ridge_penalty = ridge_penalty
        self.init_noise_scale = init_noise_scale
        self.max_iterations = max_iterations
        self.improvement_tol = improvement_tol
        self.patience = patience
        self.diagonal_mask = diagonal_mask
        self.seed = seed

    def _config(self):
        return AttRegConfig(heads=self.heads, ridge_penalty=self.ridge_penalty,
                            init_noise_scale=self.init_noise_scale,
                            max_iterations=self.max_iterations,
                            improvement_tol=self.improvement_tol,
                            patience=self.patience,
                            diagonal_mask=self.diagonal_mask, seed=self.seed)

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.model_ = _model.fit(X, np.asarray(y, dtype=float), self._config())
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return _model.predict(self.model_, X)
