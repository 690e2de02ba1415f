"""Independent reference computations used by the tests.

Everything here is deliberately written against numpy/scipy directly (never
against the package's kernels or tape) so each check pits the implementation
against a second, independent route to the same quantity.
"""

import numpy as np
from scipy.special import logsumexp


def softmax_rows_direct(m):
    e = np.exp(np.asarray(m, dtype=np.float64))
    return e / e.sum(axis=1, keepdims=True)


def pairwise_sq_euclidean_loops(a, b):
    a, b = np.asarray(a), np.asarray(b)
    out = np.empty((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i, j] = float(np.dot(a[i] - b[j], a[i] - b[j]))
    return out


def centered_cosine_direct(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ac, bc = a - a.mean(), b - b.mean()
    return float(ac @ bc / (np.linalg.norm(ac) * np.linalg.norm(bc)))


def sinkhorn_longrun(m, r, c, eps, iters=100_000):
    """Fixed-iteration log-domain scaling, no early stopping."""
    x = -np.asarray(m, dtype=np.float64) / eps
    log_r, log_c = np.log(r), np.log(c)
    alpha = np.zeros(x.shape[0])
    beta = np.zeros(x.shape[1])
    for _ in range(iters):
        alpha = log_r - logsumexp(x + beta[None, :], axis=1)
        beta = log_c - logsumexp(x + alpha[:, None], axis=0)
    return np.exp(x + alpha[:, None] + beta[None, :])


def proto_contrastive_direct(queries, prototypes):
    """Scalar-arithmetic evaluation of the prototypical contrastive loss."""
    q = np.asarray(queries, dtype=np.float64)
    p = np.asarray(prototypes, dtype=np.float64)
    n_protos = p.shape[0]
    total = 0.0
    for row in range(q.shape[0]):
        target = row % n_protos
        d = np.array([np.dot(q[row] - p[k], q[row] - p[k]) for k in range(n_protos)])
        total += -np.log(np.exp(-d[target]) / np.exp(-d).sum())
    return total / q.shape[0]
