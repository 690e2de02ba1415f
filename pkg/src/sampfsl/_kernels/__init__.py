"""Hot-kernel backend selection.

The compiled Cython extension is preferred when it built successfully; the
pure-numpy fallback is a drop-in replacement. ``backend()`` reports which one
is active. Set ``SAMPFSL_PURE=1`` to force the fallback (used by the
benchmark and for debugging).
"""

import os

if os.environ.get("SAMPFSL_PURE"):
    from sampfsl._kernels import _pure as _impl
else:
    try:
        from sampfsl._kernels import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        from sampfsl._kernels import _pure as _impl  # type: ignore[no-redef]

pairwise_sq_euclidean = _impl.pairwise_sq_euclidean
masked_softmax = _impl.masked_softmax
sinkhorn_log_iterations = _impl.sinkhorn_log_iterations


def backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'pure'."""
    return _impl.BACKEND
