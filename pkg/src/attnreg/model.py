"""Multi-head attention regression with Cholesky-parameterized similarity metrics.

Each head m carries a lower-triangular factor L_m and a scalar weight alpha_m.
Predictions aggregate softmax attention over the training outcomes:

    yhat = sum_m alpha_m * softmax(X_query @ L_m @ L_m' @ X_train') @ y_train

Parameters are trained by minimizing squared error plus a Frobenius penalty on
the factors, using the limited-memory quasi-Newton minimizer from optim.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    LineSearchFailureError,
    OptimizationFailedError,
    SingularGramError,
)
from .linalg import as_design
from .optim import LbfgsConfig, minimize

__all__ = [
    "AttentionHead",
    "AttRegConfig",
    "MultiHeadModel",
    "init_heads",
    "forward",
    "loss",
    "loss_gradient",
    "fit",
    "predict",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "attnreg-multihead"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class AttentionHead:
    factor: np.ndarray  # lower triangular P x P
    alpha: float


@dataclass(frozen=True)
class AttRegConfig:
    heads: int = 5
    ridge_penalty: float = 1e-3
    init_noise_scale: float = 0.01
    max_iterations: int = 500
    improvement_tol: float = 1e-6
    patience: int = 10
    diagonal_mask: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.heads < 1:
            raise ValueError("heads must be >= 1")
        if self.ridge_penalty < 0:
            raise ValueError("ridge_penalty must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class MultiHeadModel:
    heads: tuple
    train_x: np.ndarray
    train_y: np.ndarray
    config: AttRegConfig
    diagnostics: dict = field(default_factory=dict)


def init_heads(x_train, config: AttRegConfig) -> list[AttentionHead]:
    """Anchor every factor at sqrt(N) times the Cholesky factor of the
    ridge-regularized precision matrix, then add lower-triangular Gaussian
    noise to break the symmetry between heads."""
    X = as_design(x_train)
    n, p = X.shape
    gram = X.T @ X + config.ridge_penalty * np.eye(p)
    try:
        prec = np.linalg.solve(gram, np.eye(p))
        base = np.linalg.cholesky(0.5 * (prec + prec.T)) * np.sqrt(n)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(str(exc)) from exc

    rng = np.random.Generator(np.random.Philox(key=config.seed))
    noise_sd = config.init_noise_scale * np.linalg.norm(base) / p
    heads = []
    for _ in range(config.heads):
        noise = np.tril(rng.normal(0.0, 1.0, size=(p, p))) * noise_sd
        heads.append(AttentionHead(factor=base + noise, alpha=1.0 / config.heads))
    return heads


def _head_weights(factor: np.ndarray, x_query: np.ndarray, x_key: np.ndarray,
                  mask_diagonal: bool) -> np.ndarray:
    z_q = x_query @ factor
    z_k = x_key @ factor
    scores = z_q @ z_k.T
    if mask_diagonal:
        np.fill_diagonal(scores, -np.inf)
    scores -= scores.max(axis=1, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=1, keepdims=True)
    return scores


def _forward_arrays(factors, alphas, x_query, x_key, y, mask_diagonal):
    yhat = np.zeros(x_query.shape[0])
    for factor, alpha in zip(factors, alphas):
        yhat += alpha * (_head_weights(factor, x_query, x_key, mask_diagonal) @ y)
    return yhat


def forward(model: MultiHeadModel, x_query) -> np.ndarray:
    """Aggregate per-head attention predictions for the query rows.

    The diagonal mask applies only when enabled in the config and the query is
    the retained training design itself.
    """
    X = as_design(x_query)
    if X.shape[1] != model.train_x.shape[1]:
        raise DimensionMismatchError(
            f"query has {X.shape[1]} columns, model expects {model.train_x.shape[1]}"
        )
    mask = model.config.diagonal_mask and (
        x_query is model.train_x or X is model.train_x
    )
    factors = [h.factor for h in model.heads]
    alphas = [h.alpha for h in model.heads]
    return _forward_arrays(factors, alphas, X, model.train_x, model.train_y, mask)


def predict(model: MultiHeadModel, x_test) -> np.ndarray:
    return forward(model, x_test)


def loss(model: MultiHeadModel) -> float:
    """Penalized in-sample squared error."""
    factors = [h.factor for h in model.heads]
    alphas = [h.alpha for h in model.heads]
    yhat = _forward_arrays(factors, alphas, model.train_x, model.train_x,
                           model.train_y, model.config.diagonal_mask)
    resid = model.train_y - yhat
    penalty = model.config.ridge_penalty * sum(float(np.sum(f * f)) for f in factors)
    return float(resid @ resid) + penalty


def _loss_and_gradient_arrays(factors, alphas, X, y, penalty, mask_diagonal):
    """Value plus analytic gradients (lower-triangular dL per head, d_alpha per head)."""
    n, p = X.shape
    weights = [_head_weights(f, X, X, mask_diagonal) for f in factors]
    head_outputs = [w @ y for w in weights]
    yhat = np.zeros(n)
    for alpha, h in zip(alphas, head_outputs):
        yhat += alpha * h
    resid = y - yhat

    value = float(resid @ resid) + penalty * sum(float(np.sum(f * f)) for f in factors)
    grad_alpha = np.array([-2.0 * float(resid @ h) for h in head_outputs])
    grad_factors = []
    for factor, alpha, S, h in zip(factors, alphas, weights, head_outputs):
        # d(loss)/d(scores): softmax Jacobian applied row-wise
        G = (-2.0 * alpha) * resid[:, None] * (S * y[None, :] - h[:, None] * S)
        B = X.T @ G @ X
        dfactor = np.tril((B + B.T) @ factor) + 2.0 * penalty * factor
        grad_factors.append(dfactor)
    return value, grad_factors, grad_alpha


def loss_gradient(model: MultiHeadModel):
    """Analytic gradient of loss: list of (dL_m, d_alpha_m) per head."""
    factors = [h.factor for h in model.heads]
    alphas = [h.alpha for h in model.heads]
    _, grad_factors, grad_alpha = _loss_and_gradient_arrays(
        factors, alphas, model.train_x, model.train_y,
        model.config.ridge_penalty, model.config.diagonal_mask)
    return [(gf, float(ga)) for gf, ga in zip(grad_factors, grad_alpha)]


def _pack(factors, alphas, tril_idx):
    parts = [f[tril_idx] for f in factors]
    parts.append(np.asarray(alphas, dtype=float))
    return np.concatenate(parts)


def _unpack(theta, m, p, tril_idx):
    k = tril_idx[0].size
    factors = []
    for i in range(m):
        f = np.zeros((p, p))
        f[tril_idx] = theta[i * k:(i + 1) * k]
        factors.append(f)
    alphas = theta[m * k:]
    return factors, alphas


def fit(x_train, y, config: AttRegConfig | None = None) -> MultiHeadModel:
    """Train the multi-head model by quasi-Newton minimization with early stopping."""
    cfg = config or AttRegConfig()
    X = as_design(x_train)
    yv = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if yv.shape[0] != n:
        raise DimensionMismatchError(f"y has length {yv.shape[0]}, expected {n}")
    if n < 2:
        raise DimensionMismatchError("need at least 2 training rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(yv))):
        raise ValueError("training data contains non-finite entries")

    heads0 = init_heads(X, cfg)
    tril_idx = np.tril_indices(p)
    theta0 = _pack([h.factor for h in heads0], [h.alpha for h in heads0], tril_idx)
    m = cfg.heads

    cache = {"key": None, "value": None, "grad": None}

    def evaluate(theta):
        key = theta.tobytes()
        if cache["key"] != key:
            factors, alphas = _unpack(theta, m, p, tril_idx)
            value, gfs, ga = _loss_and_gradient_arrays(
                factors, alphas, X, yv, cfg.ridge_penalty, cfg.diagonal_mask)
            cache["key"] = key
            cache["value"] = value
            cache["grad"] = _pack(gfs, ga, tril_idx)
        return cache["value"], cache["grad"]

    try:
        result = minimize(
            objective=lambda t: evaluate(t)[0],
            gradient=lambda t: evaluate(t)[1],
            x0=theta0,
            config=LbfgsConfig(max_iterations=cfg.max_iterations),
            stall_tol=cfg.improvement_tol,
            patience=cfg.patience,
        )
    except LineSearchFailureError as exc:
        raise OptimizationFailedError(str(exc)) from exc

    factors, alphas = _unpack(result.solution, m, p, tril_idx)
    heads = tuple(AttentionHead(factor=f, alpha=float(a))
                  for f, a in zip(factors, alphas))
    diagnostics = {
        "final_loss": result.value,
        "initial_loss": result.history[0][0],
        "iterations": result.iterations,
        "stop_reason": result.stop_reason,
    }
    return MultiHeadModel(heads=heads, train_x=X, train_y=yv, config=cfg,
                          diagnostics=diagnostics)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def model_to_dict(model: MultiHeadModel) -> dict:
    """Self-describing text form; floats carry 17 significant digits."""
    p = model.train_x.shape[1]
    tril = np.tril_indices(p)
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "p": p,
        "m": len(model.heads),
        "heads": [
            {"alpha": _fmt(h.alpha), "factor": [_fmt(v) for v in h.factor[tril]]}
            for h in model.heads
        ],
        "config": asdict(model.config),
        "train_x": [[_fmt(v) for v in row] for row in model.train_x],
        "train_y": [_fmt(v) for v in model.train_y],
        "diagnostics": {k: (v if isinstance(v, (int, str)) else _fmt(v))
                        for k, v in model.diagnostics.items()},
    }


def model_from_dict(data: dict) -> MultiHeadModel:
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"unexpected model format {data.get('format')!r}")
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version {data.get('version')!r}")
    p = int(data["p"])
    tril = np.tril_indices(p)
    heads = []
    for head in data["heads"]:
        f = np.zeros((p, p))
        f[tril] = [float(v) for v in head["factor"]]
        heads.append(AttentionHead(factor=f, alpha=float(head["alpha"])))
    config = AttRegConfig(**data["config"])
    train_x = np.array([[float(v) for v in row] for row in data["train_x"]])
    train_y = np.array([float(v) for v in data["train_y"]])
    diagnostics = {
        k: (v if isinstance(v, (int, str)) and k in ("iterations", "stop_reason") else float(v))
        for k, v in data.get("diagnostics", {}).items()
    }
    return MultiHeadModel(heads=tuple(heads), train_x=train_x, train_y=train_y,
                          config=config, diagnostics=diagnostics)


def save_model(model: MultiHeadModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> MultiHeadModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
