"""Entropic optimal transport from support embeddings onto query embeddings.

The coupling minimizes <plan, cost> - epsilon * entropy subject to prescribed
marginals, solved by alternating row/column scaling in the log domain (naive
scaling underflows for small epsilon with squared-distance costs). The
row-normalized plan then maps each support to a convex combination of
queries (its barycentric projection).
"""

from dataclasses import dataclass

import numpy as np

from sampfsl import _kernels
from sampfsl.numcore import ShapeError, as_matrix, pairwise_sq_euclidean


@dataclass(frozen=True)
class Simplexes:
    """Row and column marginals: nonnegative, each summing to 1."""

    r: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name, v in (("r", self.r), ("c", self.c)):
            v = np.asarray(v, dtype=np.float64)
            object.__setattr__(self, name, v)
            if v.ndim != 1:
                raise ShapeError(f"simplex {name} must be a vector")
            if (v < 0).any():
                raise ValueError(f"simplex {name} has negative entries")
            if abs(v.sum() - 1.0) > 1e-12:
                raise ValueError(f"simplex {name} sums to {v.sum()}, not 1")


def uniform_simplexes(nk: int, nq: int) -> Simplexes:
    return Simplexes(np.full(nk, 1.0 / nk), np.full(nq, 1.0 / nq))


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = 0.05
    max_iterations: int = 1000
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray  # NK x NQ, nonnegative
    converged: bool
    iterations: int


def cost_matrix(zs, zq) -> np.ndarray:
    """Squared Euclidean distance between every support/query embedding pair."""
    return pairwise_sq_euclidean(zs, zq)


def sinkhorn(m, simplexes: Simplexes, cfg: SinkhornConfig) -> TransportPlan:
    """Solve the entropically regularized coupling for cost ``m``.

    Iterates until both marginal residuals (inf-norm) are within
    ``cfg.tolerance`` or ``cfg.max_iterations`` is hit; ``converged``
    reports which.
    """
    m = as_matrix(m, "cost matrix")
    if m.shape != (simplexes.r.size, simplexes.c.size):
        raise ShapeError(
            f"cost matrix {m.shape} does not match marginals "
            f"({simplexes.r.size}, {simplexes.c.size})"
        )
    with np.errstate(divide="ignore"):  # zero marginal entries -> -inf is fine
        log_r = np.log(simplexes.r)
        log_c = np.log(simplexes.c)
    plan, converged, iterations = _kernels.sinkhorn_log_iterations(
        m, log_r, log_c, cfg.epsilon, cfg.max_iterations, cfg.tolerance
    )
    return TransportPlan(plan, bool(converged), int(iterations))


def normalize_plan(plan: TransportPlan) -> np.ndarray:
    """Divide each row of the plan by its sum; rows of the result sum to 1."""
    pi = plan.plan if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    row_sums = pi.sum(axis=1, keepdims=True)
    if (row_sums <= 0).any():
        raise ValueError("normalize_plan: plan has a row with non-positive mass")
    return pi / row_sums


def project_supports(plan_normalized, zq) -> np.ndarray:
    """Barycentric projection: each support becomes its plan-weighted query average."""
    pi_hat = as_matrix(plan_normalized, "normalized plan")
    zq = as_matrix(zq, "query embeddings")
    if pi_hat.shape[1] != zq.shape[0]:
        raise ShapeError(
            f"plan has {pi_hat.shape[1]} columns but there are {zq.shape[0]} queries"
        )
    return pi_hat @ zq


def opt_tune_with_plan(zs, zq, cfg: SinkhornConfig | None = None):
    """Like ``opt_tune`` but also returns the TransportPlan (for diagnostics)."""
    cfg = cfg if cfg is not None else SinkhornConfig()
    zs = as_matrix(zs, "support embeddings")
    zq = as_matrix(zq, "query embeddings")
    m = cost_matrix(zs, zq)
    plan = sinkhorn(m, uniform_simplexes(zs.shape[0], zq.shape[0]), cfg)
    return project_supports(normalize_plan(plan), zq), plan


def opt_tune(zs, zq, cfg: SinkhornConfig | None = None) -> np.ndarray:
    """Align supports with queries: cost, coupling (uniform marginals), projection."""
    return opt_tune_with_plan(zs, zq, cfg)[0]
