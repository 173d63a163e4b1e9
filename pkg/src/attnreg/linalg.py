"""Spectral embedding of the predictor gram matrix and the proximity form of OLS.

Predictions of a least squares fit can be written either as X_test @ beta or as
(F_test @ F_train') @ y where F = X @ W and W = U Lambda^{-1/2} comes from the
eigendecomposition of the training gram matrix.  Both routes are implemented
here and are numerically interchangeable for full-rank designs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    NonSymmetricError,
    SingularGramError,
)

__all__ = [
    "DesignMatrix",
    "SpectralEmbedding",
    "ProximityWeights",
    "OlsFit",
    "as_design",
    "spectral_embedding",
    "factor_scores",
    "ols_fit",
    "ols_predict_attention",
    "weight_decomposition",
]


@dataclass(frozen=True)
class DesignMatrix:
    """A dense design matrix plus a flag recording whether a constant column is present."""

    values: np.ndarray
    has_intercept: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatchError(
                f"design matrix must be 2-d, got shape {values.shape}"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DimensionMismatchError("design matrix must be at least 1x1")
        if not np.all(np.isfinite(values)):
            raise ValueError("design matrix contains non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


def as_design(x) -> np.ndarray:
    """Accept a DesignMatrix or anything array-like; return a float 2-d array."""
    if isinstance(x, DesignMatrix):
        return x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SpectralEmbedding:
    """Eigendecomposition of a gram matrix and the induced whitening map.

    eigenvectors: orthogonal P x P matrix U (columns ordered by descending eigenvalue)
    eigenvalues:  descending nonnegative vector of length P
    embedding:    W = U @ diag(eigenvalues ** -0.5)
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    embedding: np.ndarray


@dataclass(frozen=True)
class ProximityWeights:
    """Query-by-key weight matrix together with the activation that produced it."""

    values: np.ndarray
    activation: str = "identity"


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    gram: np.ndarray
    embedding: SpectralEmbedding = field(repr=False)


def spectral_embedding(gram, tol: float = 1e-10) -> SpectralEmbedding:
    """Eigendecompose a strictly positive definite gram matrix.

    Raises NonSymmetricError if the asymmetry exceeds ``tol`` and
    SingularGramError if any eigenvalue falls at or below ``tol`` times the
    largest one.  Eigenvector signs are fixed so the largest-magnitude entry
    of each column is positive.
    """
    G = np.asarray(gram, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionMismatchError(f"gram must be square, got shape {G.shape}")
    asym = np.max(np.abs(G - G.T)) if G.size else 0.0
    if asym > tol:
        raise NonSymmetricError(f"asymmetry {asym:g} exceeds tolerance {tol:g}")
    G = 0.5 * (G + G.T)

    eigvals, eigvecs = np.linalg.eigh(G)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    if eigvals[0] <= tol or np.any(eigvals <= tol * eigvals[0]):
        raise SingularGramError(
            f"smallest eigenvalue {eigvals[-1]:g} at or below tolerance "
            f"{tol:g} x largest {eigvals[0]:g}"
        )

    # deterministic sign convention
    flip = eigvecs[np.argmax(np.abs(eigvecs), axis=0), np.arange(G.shape[0])] < 0
    eigvecs[:, flip] *= -1.0

    embedding = eigvecs / np.sqrt(eigvals)[None, :]
    return SpectralEmbedding(eigenvectors=eigvecs, eigenvalues=eigvals, embedding=embedding)


def factor_scores(x, emb: SpectralEmbedding) -> np.ndarray:
    """Project a design matrix onto the embedding basis: F = X @ W."""
    X = as_design(x)
    if X.shape[1] != emb.embedding.shape[0]:
        raise DimensionMismatchError(
            f"design has {X.shape[1]} columns, embedding expects {emb.embedding.shape[0]}"
        )
    return X @ emb.embedding


def ols_fit(x_train, y) -> OlsFit:
    """Solve the normal equations; the stored embedding supports attention-form prediction."""
    X = as_design(x_train)
    yv = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if yv.shape[0] != n:
        raise DimensionMismatchError(f"y has length {yv.shape[0]}, expected {n}")
    if n < p:
        raise SingularGramError(f"need at least as many rows ({n}) as columns ({p})")
    gram = X.T @ X
    emb = spectral_embedding(gram)
    beta = np.linalg.solve(gram, X.T @ yv)
    return OlsFit(coefficients=beta, gram=gram, embedding=emb)


def ols_predict_attention(x_test, x_train, y):
    """Predict via the proximity form F_test @ F_train' @ y.

    Returns (predictions, ProximityWeights).  Identical to X_test @ beta for
    full-rank training designs.
    """
    X_train = as_design(x_train)
    X_test = as_design(x_test)
    if X_test.shape[1] != X_train.shape[1]:
        raise DimensionMismatchError(
            f"test has {X_test.shape[1]} columns, train has {X_train.shape[1]}"
        )
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != X_train.shape[0]:
        raise DimensionMismatchError(
            f"y has length {yv.shape[0]}, expected {X_train.shape[0]}"
        )
    emb = spectral_embedding(X_train.T @ X_train)
    f_train = X_train @ emb.embedding
    f_test = X_test @ emb.embedding
    weights = f_test @ f_train.T
    return weights @ yv, ProximityWeights(values=weights, activation="identity")


def weight_decomposition(f_query, f_key):
    """Split an inner-product weight into scale and alignment.

    Returns (scale, cosine, weight) with scale = |f_query| * |f_key| and
    weight the raw inner product.  Cosine is reported as 0 when either norm
    vanishes.
    """
    q = np.asarray(f_query, dtype=float).ravel()
    k = np.asarray(f_key, dtype=float).ravel()
    if q.shape != k.shape:
        raise DimensionMismatchError(f"shapes {q.shape} and {k.shape} differ")
    nq = float(np.linalg.norm(q))
    nk = float(np.linalg.norm(k))
    inner = float(q @ k)
    scale = nq * nk
    cosine = inner / scale if scale > 0.0 else 0.0
    return scale, cosine, inner
