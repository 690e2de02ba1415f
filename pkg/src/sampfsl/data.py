"""Datasets: labeled sample matrices, synthetic generation, and disk format.

A dataset on disk is a directory with ``manifest.txt`` naming one matrix
file per class (numcore ``MAT`` format), chosen over a monolithic container
so the pieces stay inspectable.
"""

import os
from dataclasses import dataclass

import numpy as np

from sampfsl.numcore import Rng, ShapeError, as_matrix, load_matrix, save_matrix


class SeparationError(RuntimeError):
    """Could not place class means far enough apart within the retry budget."""


@dataclass
class Dataset:
    class_names: list
    matrices: list  # per class: (samples x input_dim) float64
    provenance: str = "ingested"
    query_shift: np.ndarray | None = None  # added to query samples at episode time

    def __post_init__(self):
        if len(self.class_names) != len(self.matrices):
            raise ShapeError("one name per class matrix required")
        if not self.matrices:
            raise ValueError("dataset has no classes")
        self.matrices = [as_matrix(m, f"class {n}") for n, m in zip(self.class_names, self.matrices)]
        dims = {m.shape[1] for m in self.matrices}
        if len(dims) != 1:
            raise ShapeError(f"inconsistent input_dim across classes: {sorted(dims)}")
        if any(m.shape[0] < 1 for m in self.matrices):
            raise ValueError("every class needs at least one sample")
        if self.query_shift is not None:
            self.query_shift = np.asarray(self.query_shift, dtype=np.float64).reshape(-1)
            if self.query_shift.size != self.input_dim:
                raise ShapeError("query_shift length does not match input_dim")

    @property
    def n_classes(self) -> int:
        return len(self.matrices)

    @property
    def input_dim(self) -> int:
        return self.matrices[0].shape[1]

    def pooled(self) -> np.ndarray:
        """All samples stacked, label-free (for pre-training)."""
        return np.vstack(self.matrices)

    def subset(self, class_indices) -> "Dataset":
        """New dataset restricted to the given class indices."""
        idx = list(class_indices)
        return Dataset(
            [self.class_names[i] for i in idx],
            [self.matrices[i].copy() for i in idx],
            provenance=self.provenance,
            query_shift=None if self.query_shift is None else self.query_shift.copy(),
        )

    def with_query_shift(self, shift) -> "Dataset":
        return Dataset(
            list(self.class_names),
            [m.copy() for m in self.matrices],
            provenance=self.provenance,
            query_shift=shift,
        )


def gen_synthetic(classes: int, per_class: int, dim: int, cluster_sigma: float,
                  shift=None, seed: int = 0, max_retries: int = 1000) -> Dataset:
    """Gaussian clusters with means kept at least 4*cluster_sigma apart.

    Means are drawn uniformly from [-1, 1]^dim and redrawn until the
    separation constraint holds (SeparationError after ``max_retries``
    attempts per mean). ``shift`` becomes the dataset's query-shift vector
    for the distribution-shift evaluation variant.
    """
    if classes < 1 or per_class < 1 or dim < 1:
        raise ValueError("classes, per_class and dim must all be >= 1")
    if cluster_sigma <= 0:
        raise ValueError("cluster_sigma must be > 0")
    rng = Rng(seed)
    min_dist = 4.0 * cluster_sigma
    means = []
    for _ in range(classes):
        for _attempt in range(max_retries):
            cand = rng.uniform(-1.0, 1.0, (dim,))
            if all(np.linalg.norm(cand - m) >= min_dist for m in means):
                means.append(cand)
                break
        else:
            raise SeparationError(
                f"could not separate {classes} means by {min_dist} in [-1,1]^{dim}"
            )
    matrices = [m + rng.normal((per_class, dim), cluster_sigma) for m in means]
    if shift is not None:
        shift = np.asarray(shift, dtype=np.float64).reshape(-1)
    return Dataset(
        [f"class{i:03d}" for i in range(classes)],
        matrices,
        provenance="synthetic",
        query_shift=shift,
    )


def save_dataset(ds: Dataset, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    lines = [f"DATASET {ds.n_classes} {ds.input_dim} {ds.provenance}\n"]
    if ds.query_shift is None:
        lines.append("SHIFT -\n")
    else:
        save_matrix(os.path.join(directory, "shift.mat"), ds.query_shift.reshape(1, -1))
        lines.append("SHIFT shift.mat\n")
    for i, (name, m) in enumerate(zip(ds.class_names, ds.matrices)):
        fname = f"class_{i:04d}.mat"
        save_matrix(os.path.join(directory, fname), m)
        lines.append(f"CLASS {name} {fname}\n")
    with open(os.path.join(directory, "manifest.txt"), "w") as f:
        f.writelines(lines)


def load_dataset(directory) -> Dataset:
    path = os.path.join(directory, "manifest.txt")
    names, matrices, provenance, shift = [], [], "ingested", None
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "DATASET":
                provenance = parts[3]
            elif parts[0] == "SHIFT":
                if parts[1] != "-":
                    shift = load_matrix(os.path.join(directory, parts[1])).reshape(-1)
            elif parts[0] == "CLASS":
                names.append(parts[1])
                matrices.append(load_matrix(os.path.join(directory, parts[2])))
            else:
                raise ValueError(f"unrecognized manifest line: {line.strip()!r}")
    return Dataset(names, matrices, provenance=provenance, query_shift=shift)
