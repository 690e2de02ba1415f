"""Batch graph construction from thresholded centered-cosine similarity."""

from dataclasses import dataclass

import numpy as np

from sampfsl.numcore import as_matrix, centered_cosine_matrix


@dataclass(frozen=True)
class BatchGraph:
    """Graph over one batch of embeddings; immutable once built.

    Edges connect nodes whose centered-cosine similarity meets the
    threshold; every node keeps a self-loop so isolated nodes still receive
    their own message.
    """

    node_features: np.ndarray  # B x d
    adjacency: np.ndarray  # B x B bool, symmetric, self-loops set
    neighbor_lists: tuple  # per node, sorted index array
    similarities: np.ndarray  # B x B centered-cosine values (diagnostics)

    def __len__(self) -> int:
        return self.node_features.shape[0]


def build_graph(v, gamma: float) -> BatchGraph:
    """Connect i != j iff centered_cosine(v_i, v_j) >= gamma; self-loops always."""
    v = as_matrix(v, "graph node features")
    sim = centered_cosine_matrix(v)
    adjacency = sim >= gamma
    np.fill_diagonal(adjacency, True)
    adjacency = adjacency | adjacency.T  # similarity is symmetrized, keep it explicit
    neighbors = tuple(np.flatnonzero(row) for row in adjacency)
    return BatchGraph(v, adjacency, neighbors, sim)


def dump_adjacency(g: BatchGraph) -> str:
    """Adjacency as a text matrix of 0/1, one row per line (debug aid)."""
    return "\n".join(" ".join("1" if x else "0" for x in row) for row in g.adjacency)
