"""Finite-difference validation of taped gradients."""

import numpy as np

from sampfsl.numcore.matrixio import NonFiniteError
from sampfsl.numcore.tensor import GradientTape, zero_grads


def grad_check(loss_fn, params: dict, h: float = 1e-5) -> float:
    """Max relative error between taped and central-difference gradients.

    ``loss_fn`` takes no arguments, reads the tensors in ``params`` and
    returns a scalar Tensor. Each parameter entry is perturbed by +-h in
    place (and restored), so the closure must re-run the full forward pass
    on every call. The per-entry error is
    |analytic - central| / max(1, |analytic|, |central|).
    """
    if h <= 0:
        raise ValueError("grad_check: h must be positive")
    zero_grads(params)
    with GradientTape() as tape:
        out = loss_fn()
    if not np.isfinite(out.data):
        raise NonFiniteError("grad_check: loss is not finite")
    tape.backward(out)
    analytic = {
        name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        for name, p in params.items()
    }

    def value() -> float:
        v = float(loss_fn().data)
        if not np.isfinite(v):
            raise NonFiniteError("grad_check: perturbed loss is not finite")
        return v

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        ga = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = value()
            flat[i] = orig - h
            minus = value()
            flat[i] = orig
            fd = (plus - minus) / (2.0 * h)
            err = abs(ga[i] - fd) / max(1.0, abs(ga[i]), abs(fd))
            if err > worst:
                worst = err
    return worst
