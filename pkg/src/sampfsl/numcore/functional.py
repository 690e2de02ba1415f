"""Shared similarity and normalization functions (plain ndarray level)."""

import warnings

import numpy as np

from sampfsl import _kernels
from sampfsl.numcore.matrixio import ShapeError, as_matrix


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax with max-subtraction; each row sums to 1."""
    return _kernels.masked_softmax(as_matrix(m, "softmax_rows input"), None)


def pairwise_sq_euclidean(a, b) -> np.ndarray:
    """Entry (i, j) is the squared Euclidean distance between a_i and b_j."""
    a = as_matrix(a, "pairwise a")
    b = as_matrix(b, "pairwise b")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"pairwise_sq_euclidean: {a.shape[1]} vs {b.shape[1]} columns")
    return _kernels.pairwise_sq_euclidean(a, b)


def centered_cosine(a, b) -> float:
    """Cosine similarity of the mean-centered vectors (Pearson-style).

    Invariant to per-vector shifts and positive scalings; lies in [-1, 1].
    A zero-variance vector has no direction after centering, so the
    similarity is reported as 0 with a diagnostic instead of NaN.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ShapeError("centered_cosine: length mismatch")
    if a.size < 2:
        raise ShapeError("centered_cosine: vectors must have at least 2 entries")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("centered_cosine: non-finite input")
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.linalg.norm(ac)
    nb = np.linalg.norm(bc)
    if na == 0.0 or nb == 0.0:
        warnings.warn(
            "centered_cosine: zero-variance vector, returning similarity 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    return float(ac @ bc / (na * nb))


def centered_cosine_matrix(v) -> np.ndarray:
    """All-pairs centered cosine similarities of the rows of ``v``.

    Zero-variance rows get similarity 0 against everything (with a
    diagnostic), matching ``centered_cosine``. The result is symmetrized to
    remove float noise from the matrix product.
    """
    v = as_matrix(v, "centered_cosine_matrix input")
    if v.shape[1] < 2:
        raise ShapeError("centered_cosine_matrix: feature dimension must be >= 2")
    centered = v - v.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    degenerate = norms == 0.0
    if degenerate.any():
        warnings.warn(
            f"centered_cosine_matrix: {int(degenerate.sum())} zero-variance row(s), similarity 0",
            RuntimeWarning,
            stacklevel=2,
        )
    safe = np.where(degenerate, 1.0, norms)
    unit = centered / safe[:, None]
    unit[degenerate] = 0.0
    sim = unit @ unit.T
    return (sim + sim.T) / 2.0
