"""Reverse-mode automatic differentiation over dense float64 matrices.

A ``Tensor`` wraps a 0-d scalar or a 2-d matrix. While a ``GradientTape`` is
active, every operation appends a backward closure to the tape; replaying the
tape in reverse accumulates gradients into ``.grad`` (same shape as the
value). Without an active tape the same functions are plain forward-only
numpy computations, which keeps finite-difference probing cheap.

Losses here are scalars and parameters are many, so reverse mode is the
right direction; one tape corresponds to one forward pass and is replayed
once.
"""

import numpy as np

from sampfsl import _kernels
from sampfsl.numcore.matrixio import NonFiniteError, ShapeError

_TAPES: list = []


def _active_tape():
    return _TAPES[-1] if _TAPES else None


class Tensor:
    """Node in a taped computation; holds a float64 scalar or matrix."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim not in (0, 2):
            raise ShapeError(f"tensors are scalars or matrices, got shape {arr.shape}")
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """Trainable named matrix."""

    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


class GradientTape:
    """Records operations of one forward pass for a single reverse replay."""

    def __init__(self):
        self._ops = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPES.pop()
        assert popped is self
        return False

    def record(self, backward) -> None:
        self._ops.append(backward)

    def __len__(self):
        return len(self._ops)

    def backward(self, out: Tensor) -> None:
        """Seed d(out)/d(out) = 1 and replay the tape in reverse."""
        if out.data.ndim != 0:
            raise ShapeError("backward target must be a scalar tensor")
        if not np.isfinite(out.data):
            raise NonFiniteError("backward target is not finite")
        out.grad = np.array(1.0)
        for bw in reversed(self._ops):
            bw()


def zero_grads(params) -> None:
    for p in params.values() if isinstance(params, dict) else params:
        p.grad = None


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` back down to ``shape`` after numpy broadcasting."""
    if shape == ():
        return np.asarray(g.sum())
    if g.shape == shape:
        return g
    out = g
    if shape[0] == 1 and g.shape[0] != 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and out.shape[1] != 1:
        out = out.sum(axis=1, keepdims=True)
    return out


def _emit(data, inputs, backward) -> Tensor:
    out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs))
    tape = _active_tape()
    if tape is not None and out.requires_grad:
        tape.record(backward(out))
    return out


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)

    def backward(out):
        def bw():
            _accum(a, _unbroadcast(out.grad, a.data.shape))
            _accum(b, _unbroadcast(out.grad, b.data.shape))

        return bw

    return _emit(a.data + b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)

    def backward(out):
        def bw():
            _accum(a, _unbroadcast(out.grad * b.data, a.data.shape))
            _accum(b, _unbroadcast(out.grad * a.data, b.data.shape))

        return bw

    return _emit(a.data * b.data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.data.shape} x {b.data.shape}")

    def backward(out):
        def bw():
            _accum(a, out.grad @ b.data.T)
            _accum(b, a.data.T @ out.grad)

        return bw

    return _emit(a.data @ b.data, (a, b), backward)


def transpose(a) -> Tensor:
    a = _wrap(a)

    def backward(out):
        def bw():
            _accum(a, out.grad.T)

        return bw

    return _emit(a.data.T.copy(), (a,), backward)


def relu(a) -> Tensor:
    a = _wrap(a)
    live = a.data > 0

    def backward(out):
        def bw():
            _accum(a, out.grad * live)

        return bw

    return _emit(np.where(live, a.data, 0.0), (a,), backward)


def vstack(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.shape[1] != b.data.shape[1]:
        raise ShapeError("vstack: column counts differ")
    na = a.data.shape[0]

    def backward(out):
        def bw():
            _accum(a, out.grad[:na])
            _accum(b, out.grad[na:])

        return bw

    return _emit(np.vstack([a.data, b.data]), (a, b), backward)


def rows(a, start: int, stop: int) -> Tensor:
    a = _wrap(a)

    def backward(out):
        def bw():
            if a.requires_grad:
                if a.grad is None:
                    a.grad = np.zeros_like(a.data)
                a.grad[start:stop] += out.grad

        return bw

    return _emit(a.data[start:stop].copy(), (a,), backward)


def hstack(parts) -> Tensor:
    parts = [_wrap(p) for p in parts]
    widths = [p.data.shape[1] for p in parts]
    offsets = np.concatenate([[0], np.cumsum(widths)])

    def backward(out):
        def bw():
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                _accum(p, out.grad[:, lo:hi])

        return bw

    return _emit(np.hstack([p.data for p in parts]), tuple(parts), backward)


def pairwise_sqdist(a, b) -> Tensor:
    """All-pairs squared Euclidean distances, differentiable in both inputs."""
    a, b = _wrap(a), _wrap(b)
    if a.data.shape[1] != b.data.shape[1]:
        raise ShapeError("pairwise_sqdist: feature dimensions differ")
    dist = _kernels.pairwise_sq_euclidean(a.data, b.data)

    def backward(out):
        def bw():
            g = out.grad
            _accum(a, 2.0 * (g.sum(axis=1, keepdims=True) * a.data - g @ b.data))
            _accum(b, 2.0 * (g.sum(axis=0)[:, None] * b.data - g.T @ a.data))

        return bw

    return _emit(dist, (a, b), backward)


def masked_softmax_rows(logits, mask=None) -> Tensor:
    """Row softmax over unmasked entries; masked entries are exactly 0."""
    logits = _wrap(logits)
    s = _kernels.masked_softmax(logits.data, None if mask is None else np.asarray(mask, dtype=np.uint8))

    def backward(out):
        def bw():
            inner = (out.grad * s).sum(axis=1, keepdims=True)
            _accum(logits, s * (out.grad - inner))

        return bw

    return _emit(s, (logits,), backward)


def cross_entropy_rows(logits, targets) -> Tensor:
    """Mean negative log-softmax of each row's target column (a scalar)."""
    logits = _wrap(logits)
    t = np.asarray(targets, dtype=np.intp)
    n = logits.data.shape[0]
    if t.shape != (n,):
        raise ShapeError(f"cross_entropy_rows: {n} rows but {t.shape} targets")
    m = logits.data.max(axis=1, keepdims=True)
    e = np.exp(logits.data - m)
    lse = (m + np.log(e.sum(axis=1, keepdims=True)))[:, 0]
    loss = (lse - logits.data[np.arange(n), t]).mean()

    def backward(out):
        def bw():
            p = e / e.sum(axis=1, keepdims=True)
            p[np.arange(n), t] -= 1.0
            _accum(logits, p * (float(out.grad) / n))

        return bw

    return _emit(loss, (logits,), backward)


def sum_all(a) -> Tensor:
    a = _wrap(a)

    def backward(out):
        def bw():
            _accum(a, np.full_like(a.data, float(out.grad)))

        return bw

    return _emit(a.data.sum(), (a,), backward)


def mean_all(a) -> Tensor:
    a = _wrap(a)
    size = a.data.size

    def backward(out):
        def bw():
            _accum(a, np.full_like(a.data, float(out.grad) / size))

        return bw

    return _emit(a.data.mean(), (a,), backward)
