"""Code generation and the symmetric accusation score."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tardosfp.model import CodeParams


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    """PCG64 generator; spawnable via ``rng.bit_generator.seed_seq``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_dirichlet(q: int, kappa: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` symmetric-Dirichlet draws, shape (size, q), every entry strictly inside (0, 1).

    Rows containing an exact zero (possible in float for small κ) are redrawn.
    """
    g = rng.standard_gamma(kappa, size=(size, q))
    while True:
        bad = ~np.all(g > 0, axis=1)
        if not bad.any():
            break
        g[bad] = rng.standard_gamma(kappa, size=(int(bad.sum()), q))
    p = g / g.sum(axis=1, keepdims=True)
    # a component can still round to 1 when the others are subnormal
    bad = np.any(p >= 1.0, axis=1)
    if bad.any():
        p[bad] = sample_dirichlet(q, kappa, int(bad.sum()), rng)
    return p


def sample_bias(params: CodeParams, rng: np.random.Generator) -> np.ndarray:
    """One bias vector p ~ Dirichlet(κ 1_q)."""
    return sample_dirichlet(params.q, params.kappa, 1, rng)[0]


def sample_biases(params: CodeParams, rng: np.random.Generator) -> np.ndarray:
    """All m bias vectors, shape (m, q)."""
    return sample_dirichlet(params.q, params.kappa, params.m, rng)


def _draw_symbols(biases: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(biases, axis=1)
    cum[:, -1] = 1.0
    u = rng.random((n, biases.shape[0]))
    return (u[:, :, None] >= cum[None, :, :-1]).sum(axis=2).astype(np.int64)


def generate_code(params: CodeParams, biases: np.ndarray, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Codeword matrix X of shape (n, m) with Pr[X_ji = α] = p_α^{(i)}."""
    biases = np.asarray(biases, dtype=float)
    if biases.shape != (params.m, params.q):
        raise ValueError(f"expected biases of shape {(params.m, params.q)}, got {biases.shape}")
    n = params.n if n is None else n
    if n is None:
        raise ValueError("number of users not given")
    return _draw_symbols(biases, n, rng)


def g1(p):
    return np.sqrt((1 - p) / p)


def g0(p):
    return -np.sqrt(p / (1 - p))


def score_segment(match: bool, p: float) -> float:
    """g₁(p) = √((1−p)/p) on a match, g₀(p) = −√(p/(1−p)) otherwise."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return math.sqrt((1 - p) / p) if match else -math.sqrt(p / (1 - p))


@dataclass
class AccusationResult:
    scores: np.ndarray
    threshold: float
    accused: set

    def __post_init__(self):
        assert self.accused == {int(j) for j in np.flatnonzero(self.scores > self.threshold)}


def segment_scores(code: np.ndarray, y: Sequence[int], biases: np.ndarray) -> np.ndarray:
    """Per-user, per-segment scores, shape (n, m)."""
    code = np.asarray(code)
    y = np.asarray(y, dtype=np.int64)
    biases = np.asarray(biases, dtype=float)
    n, m = code.shape
    if y.shape != (m,) or biases.shape[0] != m:
        raise ValueError("code, pirated word and biases disagree on m")
    py = biases[np.arange(m), y]
    if np.any(py <= 0) or np.any(py >= 1):
        raise ValueError("bias of the pirated symbol must lie in (0, 1)")
    return np.where(code == y[None, :], g1(py)[None, :], g0(py)[None, :])


def accuse(code: np.ndarray, y: Sequence[int], biases: np.ndarray, Z: float) -> AccusationResult:
    """Accusation sums S_j (compensated summation per user) and the users with S_j > Z."""
    seg = segment_scores(code, y, biases)
    scores = np.array([math.fsum(row) for row in seg])
    accused = {int(j) for j in np.flatnonzero(scores > Z)}
    return AccusationResult(scores, Z, accused)
