"""Numeric core: matrices, similarities, seeded RNG, reverse-mode autodiff."""

from sampfsl.numcore.functional import (
    centered_cosine,
    centered_cosine_matrix,
    pairwise_sq_euclidean,
    softmax_rows,
)
from sampfsl.numcore.gradcheck import grad_check
from sampfsl.numcore.matrixio import (
    NonFiniteError,
    ShapeError,
    as_matrix,
    check_finite,
    load_checkpoint,
    load_matrix,
    read_matrix,
    save_checkpoint,
    save_matrix,
    write_matrix,
)
from sampfsl.numcore.rng import Rng
from sampfsl.numcore.tensor import (
    GradientTape,
    Parameter,
    Tensor,
    add,
    cross_entropy_rows,
    hstack,
    masked_softmax_rows,
    matmul,
    mean_all,
    mul,
    pairwise_sqdist,
    relu,
    rows,
    sum_all,
    transpose,
    vstack,
    zero_grads,
)

__all__ = [
    "GradientTape",
    "NonFiniteError",
    "Parameter",
    "Rng",
    "ShapeError",
    "Tensor",
    "add",
    "as_matrix",
    "centered_cosine",
    "centered_cosine_matrix",
    "check_finite",
    "cross_entropy_rows",
    "grad_check",
    "hstack",
    "load_checkpoint",
    "load_matrix",
    "masked_softmax_rows",
    "matmul",
    "mean_all",
    "mul",
    "pairwise_sq_euclidean",
    "pairwise_sqdist",
    "read_matrix",
    "relu",
    "rows",
    "save_checkpoint",
    "save_matrix",
    "softmax_rows",
    "sum_all",
    "transpose",
    "vstack",
    "write_matrix",
    "zero_grads",
]
