"""Contrastive pre-training of the encoder and message-passing layer.

Each step: augment a batch of source samples, embed everything, build the
batch graph, refine with message passing, then apply two prototypical
contrastive losses (one on raw embeddings, one on refined embeddings) whose
weighted sum drives a gradient update of all parameters.
"""

from dataclasses import dataclass

import numpy as np

from sampfsl.encoder import EncoderParams, encode, mlp_encoder
from sampfsl.graph import build_graph
from sampfsl.numcore import (
    GradientTape,
    Rng,
    ShapeError,
    Tensor,
    as_matrix,
    cross_entropy_rows,
    mul,
    pairwise_sqdist,
    rows,
    vstack,
    zero_grads,
)
from sampfsl.samp import SampParams, samp_forward


@dataclass
class AugmentationSpec:
    """Vector-data augmentations: additive jitter, scaling, coordinate masking.

    ``jitter_sigma`` multiplies the per-dimension standard deviation of the
    batch being augmented, so its strength adapts to the data's scale.
    """

    jitter_sigma: float = 0.1
    scale_range: tuple = (0.9, 1.1)
    mask_fraction: float = 0.1

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        lo, hi = self.scale_range
        if lo > hi:
            raise ValueError("scale_range must be (lo, hi) with lo <= hi")
        if not 0 <= self.mask_fraction < 1:
            raise ValueError("mask_fraction must be in [0, 1)")


@dataclass
class PretrainConfig:
    sources: int = 16  # samples drawn per batch; batch size is (augments+1)*sources
    augments: int = 3
    beta: float = 0.7
    eta: float = 1e-3
    gamma: float = 0.0
    epochs: int = 50
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.sources < 2:
            raise ValueError("sources must be >= 2 (the contrastive loss needs negatives)")
        if self.augments < 1:
            raise ValueError("augments must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @property
    def batch_size(self) -> int:
        return (self.augments + 1) * self.sources


def augment(spec: AugmentationSpec, x, a_count: int, rng: Rng) -> np.ndarray:
    """Produce ``a_count`` augmented copies of each row of ``x``.

    Output row (a-1)*L + i is the a-th augmentation of source i; the
    contrastive loss indexing relies on this layout.
    """
    if a_count < 1:
        raise ValueError("a_count must be >= 1")
    x = as_matrix(x, "augment input")
    n, dim = x.shape
    noise_scale = spec.jitter_sigma * x.std(axis=0)
    n_mask = int(spec.mask_fraction * dim)
    lo, hi = spec.scale_range
    blocks = []
    for _ in range(a_count):
        block = x + rng.normal((n, dim)) * noise_scale
        block = block * rng.uniform(lo, hi, (n, 1))
        if n_mask:
            for r in range(n):
                block[r, rng.choice(dim, n_mask)] = 0.0
        blocks.append(block)
    return np.vstack(blocks)


def proto_contrastive_loss(queries, prototypes) -> Tensor:
    """Mean negative log-softmax over negated squared distances to prototypes.

    Query row (a-1)*L + i is scored against prototype i (the ``augment``
    layout). Differentiable; always >= 0.
    """
    q = queries if isinstance(queries, Tensor) else Tensor(queries)
    p = prototypes if isinstance(prototypes, Tensor) else Tensor(prototypes)
    n_protos = p.data.shape[0]
    n_queries = q.data.shape[0]
    if n_protos < 1 or n_queries % n_protos != 0:
        raise ShapeError(
            f"query count {n_queries} is not a multiple of prototype count {n_protos}"
        )
    targets = np.tile(np.arange(n_protos), n_queries // n_protos)
    logits = mul(pairwise_sqdist(q, p), -1.0)
    return cross_entropy_rows(logits, targets)


@dataclass
class StepResult:
    loss: float
    l1: float  # contrastive loss on raw encoder embeddings
    l2: float  # contrastive loss on graph-refined embeddings
    grads: dict


def samp_clr_step(enc: EncoderParams, samp: SampParams, cfg: PretrainConfig,
                  spec: AugmentationSpec, batch, rng: Rng) -> StepResult:
    """One full training step: forward, both losses, gradients for all parameters."""
    batch = as_matrix(batch, "pretrain batch")
    n_src = batch.shape[0]
    if n_src != cfg.sources:
        raise ShapeError(f"batch has {n_src} rows, config says {cfg.sources}")
    xbar = augment(spec, batch, cfg.augments, rng)
    params = {**enc.parameters(), **samp.parameters()}
    zero_grads(params)
    with GradientTape() as tape:
        z = encode(enc, batch)
        zbar = encode(enc, xbar)
        v = vstack(z, zbar)
        g = build_graph(v.data, cfg.gamma)
        v_refined = samp_forward(samp, g, v)
        z_ref = rows(v_refined, 0, n_src)
        zbar_ref = rows(v_refined, n_src, v.data.shape[0])
        l1 = proto_contrastive_loss(zbar, z)
        l2 = proto_contrastive_loss(zbar_ref, z_ref)
        loss = l1 * cfg.beta + l2
    tape.backward(loss)
    grads = {
        name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        for name, p in params.items()
    }
    return StepResult(float(loss.data), float(l1.data), float(l2.data), grads)


class GradientDescent:
    """Plain gradient descent with constant step size."""

    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict, grads: dict) -> None:
        for name, p in params.items():
            p.data -= self.lr * grads[name]


class Adam:
    """Adaptive-moment optimizer (decay 0.9/0.999, epsilon 1e-8), constant step size."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict = {}
        self._v: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        for name, p in params.items():
            g = grads[name]
            m = self._m.setdefault(name, np.zeros_like(p.data))
            v = self._v.setdefault(name, np.zeros_like(p.data))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return GradientDescent(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")


@dataclass
class ModelShape:
    """Architecture knobs for the default desk-scale model."""

    hidden_dims: tuple = (64,)
    embed_dim: int = 32
    samp_steps: int = 1
    samp_heads: int = 4


def build_model(input_dim: int, shape: ModelShape, rng: Rng):
    enc = mlp_encoder(input_dim, shape.hidden_dims, shape.embed_dim, rng)
    samp = SampParams(shape.embed_dim, shape.samp_steps, shape.samp_heads, rng)
    return enc, samp


def pretrain_run(samples, cfg: PretrainConfig, model=None,
                 spec: AugmentationSpec | None = None,
                 shape: ModelShape | None = None,
                 on_epoch=None):
    """Train on an unlabeled sample pool; returns (encoder, samp, history).

    ``history`` holds one record per step with keys epoch, step, L, L1, L2.
    Deterministic under ``cfg.seed``; the last partial batch of each epoch
    is dropped. ``on_epoch(epoch, enc, samp)``, when given, runs after each
    epoch (used for interval checkpointing).
    """
    samples = as_matrix(samples, "pretraining samples")
    n = samples.shape[0]
    if n < cfg.sources:
        raise ValueError(f"dataset has {n} samples, need at least {cfg.sources}")
    spec = spec if spec is not None else AugmentationSpec()
    rng = Rng(cfg.seed)
    if model is None:
        enc, samp = build_model(samples.shape[1], shape or ModelShape(), rng)
    else:
        enc, samp = model
    params = {**enc.parameters(), **samp.parameters()}
    opt = make_optimizer(cfg.optimizer, cfg.eta)
    history = []
    steps_per_epoch = n // cfg.sources
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for step in range(steps_per_epoch):
            idx = perm[step * cfg.sources:(step + 1) * cfg.sources]
            result = samp_clr_step(enc, samp, cfg, spec, samples[idx], rng)
            opt.step(params, result.grads)
            history.append({
                "epoch": epoch,
                "step": step,
                "L": result.loss,
                "L1": result.l1,
                "L2": result.l2,
            })
        if on_epoch is not None:
            on_epoch(epoch, enc, samp)
    return enc, samp, history
