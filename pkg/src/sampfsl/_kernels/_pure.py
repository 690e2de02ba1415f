"""Pure-numpy implementations of the hot kernels.

These mirror the semantics of the compiled extension ``_fast`` exactly; the
package selects whichever is importable (see ``__init__``). Everything here
operates on C-contiguous float64 arrays and performs no autodiff bookkeeping.
"""

import numpy as np

BACKEND = "pure"


def pairwise_sq_euclidean(a, b):
    """Squared Euclidean distances between all row pairs, shape (n, m)."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def masked_softmax(logits, mask=None):
    """Row-wise softmax; entries where ``mask`` is False come out exactly 0.

    Every row must have at least one unmasked entry.
    """
    if mask is None:
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)
    if not mask.any(axis=1).all():
        raise ValueError("masked_softmax: a row has no unmasked entries")
    z = np.where(mask, logits, -np.inf)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _logsumexp_rows(x):
    m = x.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=1, keepdims=True)))[:, 0]


def sinkhorn_log_iterations(m, log_r, log_c, eps, max_iter, tol):
    """Alternating log-domain scaling toward marginals (r, c).

    Returns (plan, converged, iterations). One iteration is a full row
    update followed by a column update; convergence means both marginal
    residuals (inf-norm) are <= tol.
    """
    x = -m / eps
    r = np.exp(log_r)
    c = np.exp(log_c)
    alpha = np.zeros(m.shape[0])
    beta = np.zeros(m.shape[1])
    plan = np.exp(x)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        alpha = log_r - _logsumexp_rows(x + beta[None, :])
        beta = log_c - _logsumexp_rows((x + alpha[:, None]).T)
        plan = np.exp(x + alpha[:, None] + beta[None, :])
        if not np.all(np.isfinite(plan)):
            raise FloatingPointError(
                "sinkhorn: non-finite plan entries (epsilon too small for this cost matrix)"
            )
        row_res = np.abs(plan.sum(axis=1) - r).max()
        col_res = np.abs(plan.sum(axis=0) - c).max()
        if row_res <= tol and col_res <= tol:
            converged = True
            break
    return plan, converged, it
