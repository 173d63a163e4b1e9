"""Six synthetic regression surfaces with SNR-calibrated Gaussian noise.

All surfaces live on [0,1]^5.  Noise variance is set to the sample variance of
the signal divided by the target signal-to-noise ratio, so the attainable
out-of-sample R-squared is bounded by snr / (snr + 1).

Random draws use the counter-based Philox generator keyed on the seed, which
reproduces bit-for-bit across platforms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSignalError

__all__ = [
    "DGP_KINDS",
    "DIMENSION",
    "DgpSpec",
    "SimulatedDataset",
    "eval_f",
    "signal",
    "generate",
    "r2_max",
    "dataset_to_csv",
]

DIMENSION = 5
DGP_KINDS = ("linear", "friedman1", "friedman2", "friedman3",
             "rotated_sine", "soft_radial")

_LINEAR_COEF = np.array([2.0, -1.0, 3.0, 1.5, 0.5])


def _linear(X):
    return (X - 0.5) @ _LINEAR_COEF


def _friedman1(X):
    return (10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
            + 20.0 * (X[:, 2] - 0.5) ** 2 + 10.0 * X[:, 3] + 5.0 * X[:, 4])


def _friedman2(X):
    return np.sin(np.pi * (X[:, 0] + X[:, 1] + X[:, 2])) + np.log1p(X[:, 3] ** 2)


def _friedman3(X):
    return X[:, 0] * X[:, 1] + np.log(X[:, 2] + X[:, 3] + 2.0)


def _rotated_sine(X):
    return np.sin(3.0 * X[:, :4].sum(axis=1))


def _soft_radial(X):
    return 1.0 / (1.0 + 5.0 * np.sum((X - 0.5) ** 2, axis=1))


_SURFACES = {
    "linear": _linear,
    "friedman1": _friedman1,
    "friedman2": _friedman2,
    "friedman3": _friedman3,
    "rotated_sine": _rotated_sine,
    "soft_radial": _soft_radial,
}


@dataclass(frozen=True)
class DgpSpec:
    kind: str
    dimension: int = DIMENSION

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ValueError(f"unknown DGP {self.kind!r}; choose from {DGP_KINDS}")
        if self.dimension != DIMENSION:
            raise ValueError(f"dimension is fixed at {DIMENSION}")


@dataclass(frozen=True)
class SimulatedDataset:
    x: np.ndarray
    y: np.ndarray
    signal: np.ndarray
    noise_variance: float
    snr: float
    seed: int
    kind: str


def signal(spec: DgpSpec, X: np.ndarray) -> np.ndarray:
    """Vectorized regression surface over the rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.dimension:
        raise ValueError(f"X must be (n, {spec.dimension}), got {X.shape}")
    return _SURFACES[spec.kind](X)


def eval_f(spec: DgpSpec, x) -> float:
    """Regression surface at a single point; total on R^5."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != spec.dimension:
        raise ValueError(f"x must have length {spec.dimension}")
    return float(signal(spec, x[None, :])[0])


def rng_for_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def generate(spec: DgpSpec, n: int, snr: float, seed: int) -> SimulatedDataset:
    """Draw n uniform rows, evaluate the surface, add calibrated Gaussian noise."""
    if n < 2:
        raise ValueError("n must be >= 2 for the sample variance to exist")
    if snr <= 0:
        raise ValueError("snr must be positive")
    rng = rng_for_seed(seed)
    X = rng.random((n, spec.dimension))
    f = signal(spec, X)
    sample_var = float(f.var(ddof=1))
    if sample_var < 1e-12:
        raise DegenerateSignalError(
            f"signal sample variance {sample_var:g} too small to calibrate noise")
    noise_variance = sample_var / snr
    eps = rng.normal(0.0, np.sqrt(noise_variance), size=n)
    return SimulatedDataset(x=X, y=f + eps, signal=f, noise_variance=noise_variance,
                            snr=snr, seed=seed, kind=spec.kind)


def r2_max(snr: float) -> float:
    """Upper bound on out-of-sample R-squared at a given signal-to-noise ratio."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    return snr / (snr + 1.0)


def dataset_to_csv(dataset: SimulatedDataset, path) -> None:
    """Columns x1..x5, y, signal; 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(dataset.x.shape[1])] + ["y", "signal"])
        for row, yi, fi in zip(dataset.x, dataset.y, dataset.signal):
            writer.writerow([format(v, ".17g") for v in row]
                            + [format(yi, ".17g"), format(fi, ".17g")])
