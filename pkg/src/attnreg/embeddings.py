"""Generalized linear attention: pluggable embedding matrices and activations.

The predictor is g(X_query @ Omega @ X_key' / temperature) @ y.  With the
identity activation and Omega = (X'X)^{-1} this is exactly OLS; ridge and
rank-truncated variants of Omega give closed-form ridge regression and
principal-component regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateRowError,
    DimensionMismatchError,
    RankOutOfRangeError,
    SingularGramError,
)
from .linalg import as_design, spectral_embedding

__all__ = [
    "EmbeddingMatrix",
    "Activation",
    "ols_embedding",
    "ridge_embedding",
    "pcr_embedding",
    "attention_weights",
    "linear_attention_predict",
]

_ROW_NORMALIZER_FLOOR = 1e-300


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Symmetric PSD matrix Omega defining the similarity inner-product space."""

    values: np.ndarray
    rank: int
    kind: str  # "ols", "ridge", "pcr" or "learned"
    penalty: float | None = None


@dataclass(frozen=True)
class Activation:
    """Row-wise map applied to the score matrix before weighting outcomes.

    kind is one of "identity", "softmax", "normalized_relu", "normalized_elu".
    Scores are divided by ``temperature`` before the nonlinearity; the 1/sqrt(P)
    scaling of classical attention can be recovered by setting it explicitly.
    """

    kind: str = "identity"
    temperature: float = 1.0
    elu_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "softmax", "normalized_relu", "normalized_elu"):
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.elu_scale <= 0:
            raise ValueError("elu_scale must be positive")

    def apply(self, scores: np.ndarray) -> np.ndarray:
        s = scores / self.temperature
        if self.kind == "identity":
            return s
        if self.kind == "softmax":
            shifted = s - s.max(axis=1, keepdims=True)
            e = np.exp(shifted)
            return e / e.sum(axis=1, keepdims=True)
        if self.kind == "normalized_relu":
            r = np.maximum(s, 0.0)
        else:  # normalized_elu
            r = np.where(s > 0.0, s, self.elu_scale * np.expm1(np.minimum(s, 0.0)))
        norm = r.sum(axis=1, keepdims=True)
        if np.any(np.abs(norm) <= _ROW_NORMALIZER_FLOOR):
            bad = int(np.argmax(np.abs(norm.ravel()) <= _ROW_NORMALIZER_FLOOR))
            raise DegenerateRowError(f"row {bad} has a vanishing normalizer")
        return r / norm


def _gram_eig(x_train):
    X = as_design(x_train)
    gram = X.T @ X
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals, kind="stable")[::-1]
    return X, eigvals[order], eigvecs[:, order]


def ols_embedding(x_train) -> EmbeddingMatrix:
    """Omega = (X'X)^{-1} for a strictly positive definite gram."""
    X = as_design(x_train)
    emb = spectral_embedding(X.T @ X)
    omega = emb.embedding @ emb.embedding.T
    return EmbeddingMatrix(values=omega, rank=X.shape[1], kind="ols")


def ridge_embedding(x_train, penalty: float) -> EmbeddingMatrix:
    """Omega = U (Lambda + penalty I)^{-1} U'.

    penalty = 0 reduces to the OLS embedding and requires a nonsingular gram.
    """
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    if penalty == 0.0:
        emb = ols_embedding(x_train)
        return EmbeddingMatrix(values=emb.values, rank=emb.rank, kind="ridge", penalty=0.0)
    X, eigvals, eigvecs = _gram_eig(x_train)
    inv = eigvecs / (np.maximum(eigvals, 0.0) + penalty)[None, :]
    omega = inv @ eigvecs.T
    omega = 0.5 * (omega + omega.T)
    return EmbeddingMatrix(values=omega, rank=X.shape[1], kind="ridge", penalty=penalty)


def pcr_embedding(x_train, n_components: int, tol: float = 1e-10) -> EmbeddingMatrix:
    """Rank-truncated inverse Omega_L = U_L Lambda_L^{-1} U_L'."""
    X, eigvals, eigvecs = _gram_eig(x_train)
    p = X.shape[1]
    if not 1 <= n_components <= p:
        raise RankOutOfRangeError(f"n_components={n_components} outside [1, {p}]")
    if eigvals[0] <= 0 or eigvals[n_components - 1] <= tol * eigvals[0]:
        raise SingularGramError(
            f"eigenvalue {n_components} is {eigvals[n_components - 1]:g}, "
            f"at or below tolerance"
        )
    u_l = eigvecs[:, :n_components]
    omega = (u_l / eigvals[:n_components][None, :]) @ u_l.T
    omega = 0.5 * (omega + omega.T)
    return EmbeddingMatrix(values=omega, rank=n_components, kind="pcr")


def attention_weights(x_query, x_key, omega: EmbeddingMatrix, activation: Activation) -> np.ndarray:
    """Score matrix X_query @ Omega @ X_key' / temperature passed through the activation."""
    Q = as_design(x_query)
    K = as_design(x_key)
    p = omega.values.shape[0]
    if Q.shape[1] != p or K.shape[1] != p:
        raise DimensionMismatchError(
            f"query/key have {Q.shape[1]}/{K.shape[1]} columns, embedding expects {p}"
        )
    scores = Q @ omega.values @ K.T
    return activation.apply(scores)


def linear_attention_predict(x_query, x_key, y, omega: EmbeddingMatrix,
                             activation: Activation) -> np.ndarray:
    """Weighted average of stored outcomes under the chosen embedding and activation."""
    yv = np.asarray(y, dtype=float).ravel()
    K = as_design(x_key)
    if yv.shape[0] != K.shape[0]:
        raise DimensionMismatchError(
            f"y has length {yv.shape[0]}, expected {K.shape[0]}"
        )
    return attention_weights(x_query, x_key, omega, activation) @ yv
