"""Random initialization of latent vector fields by Sinkhorn balancing."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .geometry import VectorField

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.Philox4x64-10"
DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITERS = 1000


def make_rng(*key: int) -> np.random.Generator:
    """Counter-based generator keyed by ``key`` (seed plus optional stream ids)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


@dataclass(frozen=True)
class SamplerConfig:
    kappa: int
    epsilon: float = DEFAULT_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SinkhornResult:
    matrix: np.ndarray
    iterations: int
    residual: float
    seed: int
    redraws: int = 0


def marginal_residual(m: np.ndarray) -> float:
    """``||M 1 - 1||^2 + ||1^T M - 1^T||^2``."""
    return float(np.sum((m.sum(axis=1) - 1.0) ** 2) + np.sum((m.sum(axis=0) - 1.0) ** 2))


def max_marginal_error(m: np.ndarray) -> float:
    return float(max(np.max(np.abs(m.sum(axis=1) - 1.0)), np.max(np.abs(m.sum(axis=0) - 1.0))))


class _DegenerateRow(Exception):
    pass


def sinkhorn(v0: np.ndarray, epsilon: float = DEFAULT_EPSILON,
             max_iters: int = DEFAULT_MAX_ITERS) -> tuple:
    """Alternate row and column normalization of a nonnegative matrix.

    Each iteration normalizes rows, then columns, then tests the marginals of the
    result. Returns ``(matrix, iterations, residual)``.
    """
    v = np.array(v0, dtype=np.float64, copy=True)
    if np.any(v < 0):
        raise ValueError("Sinkhorn balancing needs a nonnegative matrix")
    residual = marginal_residual(v)
    for it in range(1, max_iters + 1):
        rows = v.sum(axis=1, keepdims=True)
        if np.any(rows == 0):
            raise _DegenerateRow()
        v = v / rows
        cols = v.sum(axis=0, keepdims=True)
        if np.any(cols == 0):
            raise _DegenerateRow()
        v = v / cols
        residual = marginal_residual(v)
        if residual < epsilon and max_marginal_error(v) < epsilon:
            return v, it, residual
    raise ConvergenceError(
        f"Sinkhorn did not reach {epsilon:g} in {max_iters} iterations "
        f"(residual {residual:.3e})",
        residual=residual,
        iterations=max_iters,
    )


def sample_doubly_stochastic_info(cfg: SamplerConfig) -> SinkhornResult:
    seed = cfg.seed
    redraws = 0
    while True:
        v0 = make_rng(seed).uniform(0.0, 1.0, size=(cfg.kappa, cfg.kappa))
        try:
            m, it, res = sinkhorn(v0, cfg.epsilon, cfg.max_iters)
        except _DegenerateRow:
            log.warning("zero row sum while balancing seed %d; redrawing with seed %d",
                        seed, seed + 1)
            seed = (seed + 1) % 2**64
            redraws += 1
            continue
        return SinkhornResult(m, it, res, seed, redraws)


def sample_doubly_stochastic(cfg: SamplerConfig) -> np.ndarray:
    return sample_doubly_stochastic_info(cfg).matrix


def field_from_stochastic(M) -> VectorField:
    return VectorField.from_matrix(M, zero_diagonal=True)
