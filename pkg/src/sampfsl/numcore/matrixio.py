"""Dense float64 matrix validation, serialization, and checkpoints.

Matrices are plain 2-D C-contiguous float64 numpy arrays; ``as_matrix`` is
the boundary check that enforces shape and finiteness. The on-disk format is
a text header line ``MAT <rows> <cols>`` followed by the row-major values as
little-endian IEEE-754 doubles; round-trips are bit-exact.

A checkpoint is a directory holding one ``.mat`` file per named matrix plus
``manifest.txt`` recording names and shapes.
"""

import os

import numpy as np


class ShapeError(ValueError):
    """A matrix had the wrong shape for the requested operation."""


class NonFiniteError(ValueError):
    """NaN or Inf showed up where the contract requires finite values."""


_MAGIC = b"MAT"


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Validate and normalize ``x`` to a finite 2-D C-contiguous float64 array."""
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name}: expected 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name}: contains NaN or Inf")
    return m


def check_finite(x: np.ndarray, name: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{name}: contains NaN or Inf")
    return x


def write_matrix(f, m) -> None:
    """Write one matrix to a binary file object."""
    m = as_matrix(m)
    f.write(_MAGIC + f" {m.shape[0]} {m.shape[1]}\n".encode("ascii"))
    f.write(m.astype("<f8", copy=False).tobytes(order="C"))


def read_matrix(f) -> np.ndarray:
    """Read one matrix written by ``write_matrix``."""
    header = bytearray()
    while True:
        ch = f.read(1)
        if not ch:
            raise ValueError("truncated matrix header")
        if ch == b"\n":
            break
        header += ch
    parts = header.split()
    if len(parts) != 3 or parts[0] != _MAGIC:
        raise ValueError(f"bad matrix header: {bytes(header)!r}")
    rows, cols = int(parts[1]), int(parts[2])
    raw = f.read(rows * cols * 8)
    if len(raw) != rows * cols * 8:
        raise ValueError("truncated matrix payload")
    data = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(rows, cols)
    return np.ascontiguousarray(data)


def save_matrix(path, m) -> None:
    with open(path, "wb") as f:
        write_matrix(f, m)


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        return read_matrix(f)


def save_checkpoint(directory, named: dict) -> None:
    """Write a named set of matrices plus a manifest of their shapes."""
    os.makedirs(directory, exist_ok=True)
    lines = []
    for idx, (name, m) in enumerate(named.items()):
        m = as_matrix(m, name)
        fname = f"{idx:04d}.mat"
        save_matrix(os.path.join(directory, fname), m)
        lines.append(f"{name} {m.shape[0]} {m.shape[1]} {fname}\n")
    with open(os.path.join(directory, "manifest.txt"), "w") as f:
        f.writelines(lines)


def load_checkpoint(directory) -> dict:
    """Read back a checkpoint directory; shapes are verified against the manifest."""
    named = {}
    with open(os.path.join(directory, "manifest.txt")) as f:
        for line in f:
            if not line.strip():
                continue
            name, rows, cols, fname = line.split()
            m = load_matrix(os.path.join(directory, fname))
            if m.shape != (int(rows), int(cols)):
                raise ShapeError(
                    f"checkpoint entry {name}: manifest says {(int(rows), int(cols))}, file has {m.shape}"
                )
            named[name] = m
    return named
