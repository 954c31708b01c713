"""Dense vector/matrix primitives shared by the whole engine.

All arithmetic is 64-bit; callers get plain numpy arrays back. Vectors are
1-D float64 arrays, matrices 2-D row-major float64 arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroSumVector

__all__ = ["as_matrix", "as_vector", "cosine_similarity", "sum_normalize", "row_norms"]


def as_vector(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    return v


def as_matrix(values) -> np.ndarray:
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def cosine_similarity(u, v) -> np.ndarray:
    """Pairwise cosine similarity between the rows of two matrices.

    out[i, j] = <u_i, v_j> / (||u_i|| * ||v_j||). Rows with zero norm yield
    similarity 0 (degenerate sentences must not abort a batch run).
    """
    u = as_matrix(u)
    v = as_matrix(v)
    if u.shape[1] != v.shape[1]:
        raise DimensionMismatch(
            f"column counts differ: {u.shape[1]} vs {v.shape[1]}"
        )
    if u.shape[1] < 1:
        raise DimensionMismatch("need at least one column")
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    denom = np.outer(nu, nv)
    out = u @ v.T
    np.divide(out, denom, out=out, where=denom > 0.0)
    out[denom == 0.0] = 0.0
    return out


def sum_normalize(u) -> np.ndarray:
    """Scale a vector so its entries sum to 1 (u / 1'u).

    Zero-sum vectors are outside the domain and raise.
    """
    u = as_vector(u)
    total = float(u.sum())
    if total == 0.0:
        raise ZeroSumVector("cannot sum-normalize a vector whose entries sum to 0")
    return u / total


def row_norms(m) -> np.ndarray:
    """Euclidean norm of every row."""
    return np.linalg.norm(as_matrix(m), axis=1)
