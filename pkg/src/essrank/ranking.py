"""Similarity graph construction and the multi-bias rank recursion.

The ranker scores sentences by damped power iteration over a thresholded,
row-normalized cosine-similarity graph:

    R <- alpha * Atilde @ R + (1 - alpha) * b_hat

where b_hat is the sum-normalized compound of q bias vectors, each optionally
penalized by the sentence's information-content distance from a guide target
(the embedding-norm gap). The affine map has spectral radius <= alpha < 1, so
the iteration converges to its unique fixed point; convergence is detected by
the self-residual ||T(R) - R||_1 < epsilon, and only the reported scores are
renormalized to a distribution at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ClampedBiasZero,
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    OutOfRange,
)
from .numerics import as_matrix, cosine_similarity, row_norms

__all__ = [
    "RankConfig",
    "RankResult",
    "build_adjacency",
    "reduce_biases",
    "ic_distances",
    "compound_bias",
    "rank",
    "select_top",
]

REDUCTIONS = ("sum", "max", "mean", "median")
THRESHOLD_MODES = ("raw", "literal")


@dataclass(frozen=True)
class RankConfig:
    """Knobs of the rank recursion.

    alpha weighs graph centrality against the bias teleport; beta scales the
    information-content penalty; theta is the similarity threshold applied
    when building the adjacency. threshold_mode "raw" prunes raw cosines
    before row normalization, "literal" normalizes first and prunes
    normalized entries (which at theta=0.65 zeroes nearly every row for
    n >~ 2, hence raw is the default). zero_diagonal drops self-similarity
    edges before normalization.
    """

    alpha: float = 0.1
    beta: float = 0.0
    theta: float = 0.65
    max_iterations: int = 100
    epsilon: float = 1e-6
    reduction: str = "sum"
    threshold_mode: str = "raw"
    zero_diagonal: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta < 0.0:
            raise InvalidConfig(f"beta must be >= 0, got {self.beta}")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidConfig(f"theta must lie in [0, 1], got {self.theta}")
        if self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be positive")
        if self.epsilon <= 0.0:
            raise InvalidConfig("epsilon must be > 0")
        if self.reduction not in REDUCTIONS:
            raise InvalidConfig(f"reduction must be one of {REDUCTIONS}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise InvalidConfig(f"threshold_mode must be one of {THRESHOLD_MODES}")


@dataclass(frozen=True)
class RankResult:
    """Converged salience scores.

    scores sum to 1; raw_scores is the converged iterate before the final
    renormalization (it satisfies ||R - (alpha*Atilde R + (1-alpha) b_hat)||_1
    = residual), kept so the fixed-point property stays verifiable.
    per_bias_contributions traces the q penalized bias rows as they entered
    the reduction (before clamping and normalization).
    """

    scores: np.ndarray
    iterations_used: int
    residual: float
    converged: bool
    raw_scores: np.ndarray = field(repr=False, default=None)
    per_bias_contributions: Optional[np.ndarray] = field(repr=False, default=None)


def build_adjacency(s, theta: float, mode: str = "raw", zero_diagonal: bool = False) -> np.ndarray:
    """Thresholded, row-normalized sentence-similarity adjacency.

    raw mode: prune raw cosines below theta, then divide each nonzero-sum row
    by its sum. literal mode: divide each nonzero-sum row of the raw cosine
    matrix by its sum, then zero normalized entries below theta. Rows whose
    sum is 0 stay all-zero (dangling) in both modes.
    """
    if mode not in THRESHOLD_MODES:
        raise InvalidConfig(f"unknown threshold mode {mode!r}")
    s = as_matrix(s)
    if s.shape[0] < 1:
        raise EmptyInput("need at least one row to build an adjacency")
    a = cosine_similarity(s, s)
    if zero_diagonal:
        np.fill_diagonal(a, 0.0)
    if mode == "raw":
        a[a < theta] = 0.0
        sums = a.sum(axis=1, keepdims=True)
        np.divide(a, sums, out=a, where=sums != 0.0)
        a[(sums == 0.0).repeat(a.shape[1], axis=1)] = 0.0
    else:
        sums = a.sum(axis=1, keepdims=True)
        np.divide(a, sums, out=a, where=sums != 0.0)
        a[(sums == 0.0).repeat(a.shape[1], axis=1)] = 0.0
        a[a < theta] = 0.0
    return a


def reduce_biases(bias_vectors, reduction: str = "sum") -> np.ndarray:
    """Fold q bias rows into one compound vector."""
    b = as_matrix(bias_vectors)
    if b.shape[0] < 1:
        raise EmptyInput("need at least one bias vector")
    if reduction == "sum":
        return b.sum(axis=0)
    if reduction == "max":
        return b.max(axis=0)
    if reduction == "mean":
        return b.mean(axis=0)
    if reduction == "median":
        return np.median(b, axis=0)
    raise InvalidConfig(f"reduction must be one of {REDUCTIONS}")


def ic_distances(s, g) -> np.ndarray:
    """Distance of each sentence's information content from the guide target.

    Information content is proxied by the embedding norm; the target is the
    arithmetic mean of the guide rows' norms.
    """
    s = as_matrix(s)
    g = as_matrix(g)
    if g.shape[0] < 1:
        raise EmptyInput("guide matrix must contain at least one row")
    target = float(row_norms(g).mean())
    return np.abs(row_norms(s) - target)


def compound_bias(biases, config: RankConfig, s=None, g=None) -> np.ndarray:
    """Penalize, reduce, clamp, and sum-normalize the bias rows.

    Returns the teleport distribution b_hat used by :func:`rank`. With
    beta > 0 the guide matrix g and the sentence matrix s are required to
    compute the per-sentence information-content penalty.
    """
    b = as_matrix(biases)
    if config.beta > 0.0:
        if g is None:
            raise InvalidConfig("beta > 0 requires a guide matrix")
        b = b - config.beta * ic_distances(s, g)
    compound = reduce_biases(b, config.reduction)
    compound = np.maximum(compound, 0.0)
    total = float(compound.sum())
    if total == 0.0:
        raise ClampedBiasZero(
            "compound bias is all-zero after clamping negative entries at 0; "
            "no teleport distribution remains"
        )
    return compound / total


def rank(s, biases, g=None, config: RankConfig = RankConfig()) -> RankResult:
    """Run the multi-bias rank recursion to its fixed point.

    s: n x d sentence encodings; biases: q x n bias rows (one per query or
    sentiment channel); g: optional m x d guide encodings, required when
    config.beta > 0.
    """
    s = as_matrix(s)
    b = as_matrix(biases)
    n = s.shape[0]
    if b.shape[1] != n:
        raise DimensionMismatch(
            f"bias rows have length {b.shape[1]} but there are {n} sentences"
        )

    adjacency = build_adjacency(s, config.theta, config.threshold_mode, config.zero_diagonal)
    penalized = b
    if config.beta > 0.0:
        if g is None:
            raise InvalidConfig("beta > 0 requires a guide matrix")
        penalized = b - config.beta * ic_distances(s, g)
    compound = np.maximum(reduce_biases(penalized, config.reduction), 0.0)
    total = float(compound.sum())
    if total == 0.0:
        raise ClampedBiasZero(
            "compound bias is all-zero after clamping negative entries at 0; "
            "no teleport distribution remains"
        )
    b_hat = compound / total

    alpha = config.alpha
    r = np.full(n, 1.0 / n)
    residual = np.inf
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        r_next = alpha * (adjacency @ r) + (1.0 - alpha) * b_hat
        residual = float(np.abs(r_next - r).sum())
        if residual < config.epsilon:
            # r itself satisfies the fixed-point bound; keep it, not r_next.
            break
        r = r_next

    final_sum = float(r.sum())
    if final_sum <= 0.0:
        raise ClampedBiasZero("rank iterate lost all mass; cannot normalize scores")
    return RankResult(
        scores=r / final_sum,
        iterations_used=iterations,
        residual=residual,
        converged=residual < config.epsilon,
        raw_scores=r,
        per_bias_contributions=np.array(penalized, copy=True),
    )


def select_top(result: RankResult, k: int) -> list[int]:
    """Indices of the k best-scored sentences, returned in source order.

    Ties break toward the lower sentence index.
    """
    n = len(result.scores)
    if not 1 <= k <= n:
        raise OutOfRange(f"k must lie in [1, {n}], got {k}")
    order = sorted(range(n), key=lambda i: (-result.scores[i], i))
    return sorted(order[:k])
