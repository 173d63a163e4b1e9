"""Self-attention views of autoregressions.

In-sample fitted values of a no-intercept AR(1) are a @ y_plus with
a = y_lag (y_lag' y_lag)^{-1} y_lag', an orthogonal projection; the same hat
matrix built from a lagged panel gives per-equation VAR(1) fitted values.
Masking restricts a prediction to sources at or before its own time index and
renormalizes the surviving weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateLagError,
    DegenerateMaskError,
    DimensionMismatchError,
    SingularGramError,
)

__all__ = ["SeriesAttention", "ar1_attention", "masked_prediction",
           "var_self_attention", "lag_gram_gap"]


@dataclass(frozen=True)
class SeriesAttention:
    """(N-1) x (N-1) weight matrix; row t weights sources y_1..y_{N-1} for target y_{t+1}."""

    weights: np.ndarray
    lag: int = 1


def ar1_attention(y):
    """Attention weights and fitted values of a no-intercept AR(1) regression."""
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] < 3:
        raise DimensionMismatchError("series must have length >= 3")
    y_lag = yv[:-1]
    y_plus = yv[1:]
    ss = float(y_lag @ y_lag)
    if ss < 1e-24:
        raise DegenerateLagError(f"lag vector sum of squares {ss:g} below tolerance")
    weights = np.outer(y_lag, y_lag) / ss
    return SeriesAttention(weights=weights), weights @ y_plus


def masked_prediction(weights_row, y, t: int) -> float:
    """Weighted average over sources with index <= t, renormalized to sum to 1.

    t is 1-based; t = 1 uses only the first source.
    """
    a = np.asarray(weights_row, dtype=float).ravel()
    yv = np.asarray(y, dtype=float).ravel()
    if a.shape[0] != yv.shape[0]:
        raise DimensionMismatchError(
            f"weights have length {a.shape[0]}, sources {yv.shape[0]}")
    if not 1 <= t <= a.shape[0]:
        raise DimensionMismatchError(f"t={t} outside [1, {a.shape[0]}]")
    denom = float(a[:t].sum())
    if abs(denom) <= 1e-12:
        raise DegenerateMaskError(f"masked weight sum {denom:g} is degenerate")
    return float((a[:t] / denom) @ yv[:t])


def var_self_attention(Y, include_intercept: bool = False):
    """Hat matrix and fitted values of a VAR(1) estimated by per-equation OLS.

    Returns (hat, fitted) with hat = Y_lag (Y_lag' Y_lag)^{-1} Y_lag' built on
    the lagged panel (optionally augmented with a constant column).
    """
    Ym = np.asarray(Y, dtype=float)
    if Ym.ndim == 1:
        Ym = Ym[:, None]
    n, m = Ym.shape
    if n < 3:
        raise DimensionMismatchError("panel must have at least 3 rows")
    Y_lag = Ym[:-1]
    Y_plus = Ym[1:]
    if include_intercept:
        Y_lag = np.column_stack([np.ones(n - 1), Y_lag])
    if n - 1 < Y_lag.shape[1]:
        raise DimensionMismatchError(
            f"need at least {Y_lag.shape[1]} lagged rows, have {n - 1}")
    gram = Y_lag.T @ Y_lag
    try:
        solved = np.linalg.solve(gram, Y_lag.T)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(str(exc)) from exc
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularGramError(f"lagged gram condition number {cond:g}")
    hat = Y_lag @ solved
    return hat, hat @ Y_plus


def lag_gram_gap(y) -> float:
    """Relative difference between the lagged and full-sample sums of squares.

    Diagnostic for the stationarity approximation (y_lag' y_lag vs y' y).
    """
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] < 2:
        raise DimensionMismatchError("series must have length >= 2")
    full = float(yv @ yv)
    lagged = float(yv[:-1] @ yv[:-1])
    if full == 0.0:
        return 0.0
    return abs(full - lagged) / full
