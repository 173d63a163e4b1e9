"""Limited-memory BFGS with a strong-Wolfe line search.

Works on flat parameter vectors with user-supplied objective and gradient
callbacks.  Returns the best iterate seen, plus enough per-step data to audit
the Wolfe conditions after the fact.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import LineSearchFailureError, NonFiniteObjectiveError

__all__ = ["LbfgsConfig", "MinimizeResult", "StepRecord", "minimize"]


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    max_iterations: int = 200
    grad_tol: float = 1e-8  # infinity norm
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_steps: int = 40

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class StepRecord:
    """One accepted line-search step: enough to verify the strong Wolfe conditions."""

    step: float
    value_start: float
    slope_start: float
    value_end: float
    slope_end: float


@dataclass
class MinimizeResult:
    solution: np.ndarray
    value: float
    iterations: int
    stop_reason: str  # gradient_tol | improvement_stall | max_iterations | line_search_failure
    history: list = field(default_factory=list)  # (value, grad infinity norm) per accepted iterate
    steps: list = field(default_factory=list)  # StepRecord per accepted step


def _line_search(phi, dphi, f0, d0, c1, c2, max_steps):
    """Strong Wolfe line search (bracket then zoom).

    phi(a) evaluates the objective along the ray, dphi(a) the directional
    derivative.  Returns (alpha, f_alpha, dphi_alpha) or None on failure.
    d0 must be negative.
    """
    evals = 0

    def zoom(lo, f_lo, d_lo, hi, f_hi):
        nonlocal evals
        while evals < max_steps:
            # quadratic interpolation using phi(lo), phi'(lo), phi(hi); guarded bisection
            denom = 2.0 * (f_hi - f_lo - d_lo * (hi - lo))
            if denom != 0.0 and np.isfinite(denom):
                a = lo - d_lo * (hi - lo) ** 2 / denom
            else:
                a = 0.5 * (lo + hi)
            span = abs(hi - lo)
            if not np.isfinite(a) or a <= min(lo, hi) + 0.1 * span or a >= max(lo, hi) - 0.1 * span:
                a = 0.5 * (lo + hi)
            fa = phi(a)
            evals += 1
            if not np.isfinite(fa) or fa > f0 + c1 * a * d0 or fa >= f_lo:
                hi, f_hi = a, fa
            else:
                da = dphi(a)
                if abs(da) <= -c2 * d0:
                    return a, fa, da
                if da * (hi - lo) >= 0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, d_lo = a, fa, da
            if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
                return None
        return None

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = 1.0
    while evals < max_steps:
        fa = phi(a)
        evals += 1
        if not np.isfinite(fa) or fa > f0 + c1 * a * d0 or (fa >= f_prev and a_prev > 0.0):
            return zoom(a_prev, f_prev, d_prev, a, fa)
        da = dphi(a)
        if abs(da) <= -c2 * d0:
            return a, fa, da
        if da >= 0:
            return zoom(a, fa, da, a_prev, f_prev)
        a_prev, f_prev, d_prev = a, fa, da
        a = 2.0 * a
    return None


def minimize(objective, gradient, x0, config: LbfgsConfig | None = None,
             stall_tol: float = 0.0, patience: int = 1) -> MinimizeResult:
    """Minimize a smooth unconstrained objective from x0.

    Stops on gradient infinity norm, on ``patience`` consecutive accepted
    iterations whose relative improvement stays below ``stall_tol``, on the
    iteration cap, or on line-search failure (returning the best iterate;
    a failure on the very first search raises LineSearchFailureError).
    """
    cfg = config or LbfgsConfig()
    x = np.asarray(x0, dtype=float).copy()
    f = float(objective(x))
    g = np.asarray(gradient(x), dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteObjectiveError("objective or gradient non-finite at x0")

    pairs: deque = deque(maxlen=cfg.memory)
    best_x, best_f = x.copy(), f
    history = [(f, float(np.max(np.abs(g))) if g.size else 0.0)]
    steps: list[StepRecord] = []
    stall_count = 0
    stop_reason = "max_iterations"
    iteration = 0

    while True:
        ginf = float(np.max(np.abs(g))) if g.size else 0.0
        if ginf <= cfg.grad_tol:
            stop_reason = "gradient_tol"
            break
        if iteration >= cfg.max_iterations:
            stop_reason = "max_iterations"
            break

        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, yv, rho in reversed(pairs):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * yv
        if pairs:
            s, yv, _ = pairs[-1]
            gamma = (s @ yv) / (yv @ yv)
            q *= gamma
        for (s, yv, rho), a in zip(pairs, reversed(alphas)):
            b = rho * (yv @ q)
            q += (a - b) * s
        p = -q

        d0 = float(g @ p)
        if d0 >= 0.0:  # direction not a descent; restart from steepest descent
            pairs.clear()
            p = -g
            d0 = float(g @ p)
            if d0 >= 0.0:
                stop_reason = "gradient_tol"
                break

        grad_cache: dict[float, np.ndarray] = {}

        def phi(a):
            return float(objective(x + a * p))

        def dphi(a):
            ga = np.asarray(gradient(x + a * p), dtype=float)
            grad_cache[a] = ga
            return float(ga @ p)

        found = _line_search(phi, dphi, f, d0, cfg.wolfe_c1, cfg.wolfe_c2,
                             cfg.max_line_search_steps)
        if found is None:
            if iteration == 0:
                raise LineSearchFailureError("line search failed at the first iteration")
            stop_reason = "line_search_failure"
            break
        alpha, f_new, d_new = found
        x_new = x + alpha * p
        g_new = grad_cache.get(alpha)
        if g_new is None:
            g_new = np.asarray(gradient(x_new), dtype=float)

        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            pairs.append((s, yv, 1.0 / sy))

        steps.append(StepRecord(step=alpha, value_start=f, slope_start=d0,
                                value_end=f_new, slope_end=d_new))
        rel_impr = (f - f_new) / max(1.0, abs(f))
        x, f, g = x_new, f_new, g_new
        iteration += 1
        history.append((f, float(np.max(np.abs(g))) if g.size else 0.0))
        if f < best_f:
            best_f, best_x = f, x.copy()

        if rel_impr < stall_tol:
            stall_count += 1
            if stall_count >= patience:
                stop_reason = "improvement_stall"
                break
        else:
            stall_count = 0

    return MinimizeResult(solution=best_x, value=best_f, iterations=iteration,
                          stop_reason=stop_reason, history=history, steps=steps)
