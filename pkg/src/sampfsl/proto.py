"""Prototype construction, nearest-mean classifier init, and fine-tuning.

Initializing a linear layer with weights 2*c_k and bias -||c_k||^2 makes its
score 2 c_k . z - ||c_k||^2 = ||z||^2 - ||z - c_k||^2 (up to a per-query
constant), so argmax over classes equals nearest-prototype classification.
"""

from dataclasses import dataclass

import numpy as np

from sampfsl.numcore import (
    GradientTape,
    Parameter,
    Rng,
    ShapeError,
    Tensor,
    add,
    as_matrix,
    cross_entropy_rows,
    matmul,
    transpose,
)


@dataclass(frozen=True)
class Prototypes:
    means: np.ndarray  # N x d, row k is class k's prototype

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]


@dataclass
class LinearClassifier:
    weights: np.ndarray  # N x d
    biases: np.ndarray  # N

    def __post_init__(self):
        self.weights = as_matrix(self.weights, "classifier weights")
        self.biases = np.asarray(self.biases, dtype=np.float64).reshape(-1)
        if self.biases.size != self.weights.shape[0]:
            raise ShapeError("classifier bias count does not match weight rows")

    def scores(self, z) -> np.ndarray:
        z = as_matrix(z, "classifier input")
        return z @ self.weights.T + self.biases

    def copy(self) -> "LinearClassifier":
        return LinearClassifier(self.weights.copy(), self.biases.copy())


def compute_prototypes(embeddings, labels) -> Prototypes:
    """Per-class mean of the (projected) support embeddings.

    Labels must cover every class 0..N-1 at least once.
    """
    z = as_matrix(embeddings, "support embeddings")
    y = np.asarray(labels, dtype=np.intp).reshape(-1)
    if y.size != z.shape[0]:
        raise ShapeError("one label per support row required")
    n_classes = int(y.max()) + 1 if y.size else 0
    if n_classes < 1:
        raise ValueError("no supports given")
    means = np.empty((n_classes, z.shape[1]))
    for k in range(n_classes):
        members = z[y == k]
        if members.shape[0] == 0:
            raise ValueError(f"class {k} has no support samples")
        means[k] = members.mean(axis=0)
    return Prototypes(means)


def init_classifier(protos: Prototypes) -> LinearClassifier:
    """Weights 2*c_k, biases -||c_k||^2: scores rank classes by prototype distance."""
    c = protos.means
    return LinearClassifier(2.0 * c, -np.einsum("kd,kd->k", c, c))


def _half_per_class(labels: np.ndarray, rng: Rng) -> np.ndarray:
    """Default fine-tuning subset: ceil(K/2) supports per class, no replacement."""
    picked = []
    for k in np.unique(labels):
        members = np.flatnonzero(labels == k)
        take = (members.size + 1) // 2
        picked.append(members[rng.choice(members.size, take)])
    return np.sort(np.concatenate(picked))


def finetune_classifier(clf: LinearClassifier, supports, labels, iterations: int,
                        lr: float, subset_rule=None, rng: Rng | None = None) -> LinearClassifier:
    """Gradient steps on mean cross-entropy of the classifier scores.

    Only the classifier updates; the embeddings are fixed inputs. Each
    iteration trains on a freshly sampled support subset (default: half of
    each class).
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    z = as_matrix(supports, "support embeddings")
    y = np.asarray(labels, dtype=np.intp).reshape(-1)
    if z.shape[0] == 0:
        raise ValueError("empty support set")
    if iterations == 0:
        return clf.copy()
    rule = subset_rule if subset_rule is not None else _half_per_class
    rng = rng if rng is not None else Rng(0)
    w = Parameter("clf.w", clf.weights.copy())
    b = Parameter("clf.b", clf.biases.reshape(1, -1).copy())
    for _ in range(iterations):
        idx = np.asarray(rule(y, rng), dtype=np.intp)
        w.grad = None
        b.grad = None
        with GradientTape() as tape:
            logits = add(matmul(Tensor(z[idx]), transpose(w)), b)
            loss = cross_entropy_rows(logits, y[idx])
        tape.backward(loss)
        w.data -= lr * w.grad
        b.data -= lr * b.grad
    return LinearClassifier(w.data, b.data.reshape(-1))


def predict(clf: LinearClassifier, zq) -> np.ndarray:
    """Argmax class per query row; exact ties resolve to the lowest index."""
    return np.argmax(clf.scores(zq), axis=1)
