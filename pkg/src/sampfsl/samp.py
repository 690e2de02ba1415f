"""Self-attention message passing over a batch graph.

Each step runs H scaled dot-product attention heads restricted to graph
neighborhoods and concatenates their outputs back to the embedding
dimension. No residuals, no nonlinearity, no normalization; the graph is
held fixed across steps.
"""

import numpy as np

from sampfsl.graph import BatchGraph
from sampfsl.numcore import (
    Parameter,
    Rng,
    ShapeError,
    Tensor,
    hstack,
    masked_softmax_rows,
    matmul,
    mul,
    transpose,
)


class SampParams:
    """Per-step, per-head query/key/message weights, each (d/H) x d."""

    def __init__(self, embed_dim: int, steps: int, heads: int, rng: Rng, name: str = "samp"):
        if steps < 1 or heads < 1:
            raise ValueError("steps and heads must be >= 1")
        if embed_dim % heads != 0:
            raise ShapeError(f"head count {heads} does not divide embedding dim {embed_dim}")
        self.embed_dim = embed_dim
        self.steps = steps
        self.heads = heads
        self.head_dim = embed_dim // heads
        self.name = name
        bound = np.sqrt(6.0 / (self.head_dim + embed_dim))
        self.w_query = []
        self.w_key = []
        self.w_msg = []
        for s in range(steps):
            wq_row, wk_row, wm_row = [], [], []
            for h in range(heads):
                shape = (self.head_dim, embed_dim)
                wq_row.append(Parameter(f"{name}.s{s}.h{h}.wq", rng.uniform(-bound, bound, shape)))
                wk_row.append(Parameter(f"{name}.s{s}.h{h}.wk", rng.uniform(-bound, bound, shape)))
                wm_row.append(Parameter(f"{name}.s{s}.h{h}.wm", rng.uniform(-bound, bound, shape)))
            self.w_query.append(wq_row)
            self.w_key.append(wk_row)
            self.w_msg.append(wm_row)

    def parameters(self) -> dict:
        out = {}
        for group in (self.w_query, self.w_key, self.w_msg):
            for row in group:
                for p in row:
                    out[p.name] = p
        return out


def _one_step(params: SampParams, v: Tensor, adjacency: np.ndarray, step: int) -> Tensor:
    inv_sqrt_d = 1.0 / np.sqrt(params.embed_dim)
    head_outputs = []
    for h in range(params.heads):
        q = matmul(v, transpose(params.w_query[step][h]))
        k = matmul(v, transpose(params.w_key[step][h]))
        logits = mul(matmul(q, transpose(k)), inv_sqrt_d)
        lam = masked_softmax_rows(logits, adjacency)
        msg = matmul(v, transpose(params.w_msg[step][h]))
        head_outputs.append(matmul(lam, msg))
    return hstack(head_outputs)


def samp_forward(params: SampParams, g: BatchGraph, v=None) -> Tensor:
    """Refine node features with ``params.steps`` message-passing steps.

    ``v`` defaults to the graph's node features; pass the Tensor they came
    from to keep the result differentiable (the adjacency itself is a
    constant).
    """
    if v is None:
        v = Tensor(g.node_features)
    elif not isinstance(v, Tensor):
        v = Tensor(v)
    if v.data.shape[1] != params.embed_dim:
        raise ShapeError(
            f"samp_forward expects {params.embed_dim} columns, got {v.data.shape[1]}"
        )
    for step in range(params.steps):
        v = _one_step(params, v, g.adjacency, step)
    return v


def attention_scores(params: SampParams, g: BatchGraph, step: int, head: int) -> np.ndarray:
    """One head's attention matrix at ``step``; exactly 0 outside adjacency.

    Earlier steps are replayed to produce the features that feed ``step``.
    """
    if not 0 <= step < params.steps:
        raise IndexError(f"step {step} out of range")
    if not 0 <= head < params.heads:
        raise IndexError(f"head {head} out of range")
    v = Tensor(g.node_features)
    for s in range(step):
        v = _one_step(params, v, g.adjacency, s)
    inv_sqrt_d = 1.0 / np.sqrt(params.embed_dim)
    q = matmul(v, transpose(params.w_query[step][head]))
    k = matmul(v, transpose(params.w_key[step][head]))
    logits = mul(matmul(q, transpose(k)), inv_sqrt_d)
    return masked_softmax_rows(logits, g.adjacency).data
