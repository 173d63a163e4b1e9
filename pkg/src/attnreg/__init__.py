"""Least squares as attention: linear attention embeddings, a trained
multi-head attention regression estimator, simulation DGPs, autoregressive
hat matrices, and a Monte Carlo benchmark harness."""

from .embeddings import (
    Activation,
    EmbeddingMatrix,
    attention_weights,
    linear_attention_predict,
    ols_embedding,
    pcr_embedding,
    ridge_embedding,
)
from .estimators import AttentionRegressor, LinearAttentionRegressor
from .experiment import ExperimentConfig, out_of_sample_r2, run_experiment
from .dgp import DgpSpec, eval_f, generate, r2_max
from .linalg import (
    DesignMatrix,
    OlsFit,
    ProximityWeights,
    SpectralEmbedding,
    factor_scores,
    ols_fit,
    ols_predict_attention,
    spectral_embedding,
    weight_decomposition,
)
from .model import AttRegConfig, MultiHeadModel, fit, load_model, predict, save_model
from .optim import LbfgsConfig, MinimizeResult, minimize
from .timeseries import ar1_attention, masked_prediction, var_self_attention

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "AttRegConfig",
    "AttentionRegressor",
    "DesignMatrix",
    "DgpSpec",
    "EmbeddingMatrix",
    "ExperimentConfig",
    "LbfgsConfig",
    "LinearAttentionRegressor",
    "MinimizeResult",
    "MultiHeadModel",
    "OlsFit",
    "ProximityWeights",
    "SpectralEmbedding",
    "ar1_attention",
    "attention_weights",
    "eval_f",
    "factor_scores",
    "fit",
    "generate",
    "linear_attention_predict",
    "load_model",
    "masked_prediction",
    "minimize",
    "ols_embedding",
    "ols_fit",
    "ols_predict_attention",
    "out_of_sample_r2",
    "pcr_embedding",
    "predict",
    "r2_max",
    "ridge_embedding",
    "run_experiment",
    "save_model",
    "spectral_embedding",
    "var_self_attention",
    "weight_decomposition",
]
