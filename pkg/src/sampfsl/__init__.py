"""Few-shot classification from self-attention message passing and optimal transport.

The pipeline: contrastively pre-train an encoder plus a graph-attention
refinement layer on unlabeled data, then at evaluation time align each
episode's support embeddings onto its query embeddings with entropic optimal
transport before building class prototypes.
"""

from sampfsl._kernels import backend

__version__ = "0.1.0"

__all__ = ["backend", "__version__"]
