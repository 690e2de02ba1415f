"""Feature extractors: a small MLP for vector data and an identity passthrough."""

import numpy as np

from sampfsl.numcore import (
    Parameter,
    Rng,
    ShapeError,
    Tensor,
    add,
    as_matrix,
    check_finite,
    matmul,
    relu,
    transpose,
)


class EncoderParams:
    """MLP encoder parameters: rectifier after each hidden layer, linear output.

    ``hidden_dims=()`` with ``identity=True`` gives a parameter-free
    passthrough for pre-embedded data.
    """

    def __init__(self, input_dim: int, hidden_dims, output_dim: int, rng: Rng | None = None,
                 identity: bool = False, name: str = "encoder"):
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.identity = identity
        self.name = name
        self.weights: list[Parameter] = []
        self.biases: list[Parameter] = []
        if identity:
            if input_dim != output_dim:
                raise ShapeError("identity encoder requires input_dim == output_dim")
            return
        if rng is None:
            raise ValueError("rng required to initialize encoder weights")
        dims = [input_dim, *hidden_dims, output_dim]
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, (fan_out, fan_in))
            self.weights.append(Parameter(f"{name}.w{i}", w))
            self.biases.append(Parameter(f"{name}.b{i}", np.zeros((1, fan_out))))

    def parameters(self) -> dict:
        out = {}
        for w, b in zip(self.weights, self.biases):
            out[w.name] = w
            out[b.name] = b
        return out


def identity_encoder(dim: int) -> EncoderParams:
    return EncoderParams(dim, (), dim, identity=True)


def mlp_encoder(input_dim: int, hidden_dims, output_dim: int, rng: Rng,
                name: str = "encoder") -> EncoderParams:
    return EncoderParams(input_dim, tuple(hidden_dims), output_dim, rng=rng, name=name)


def encode(params: EncoderParams, batch) -> Tensor:
    """Forward pass; differentiable w.r.t. parameters and input when taped."""
    x = batch if isinstance(batch, Tensor) else Tensor(as_matrix(batch, "encoder input"))
    if x.data.shape[1] != params.input_dim:
        raise ShapeError(
            f"encoder expects {params.input_dim} input columns, got {x.data.shape[1]}"
        )
    if params.identity:
        return x
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = add(matmul(h, transpose(w)), b)
        if i < last:
            h = relu(h)
    check_finite(h.data, "encoder output")
    return h
