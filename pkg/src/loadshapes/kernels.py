"""Backend selector for the distance kernels.

The compiled extension is used when it imported cleanly; otherwise the numpy
fallback takes over.  Setting ``LOADSHAPES_PURE_PYTHON=1`` forces the
fallback (useful for benchmarking and debugging).
"""

import os

from . import _pykernels

if os.environ.get("LOADSHAPES_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # pragma: no cover - depends on build environment
        _impl = _pykernels

BACKEND = _impl.BACKEND
assign_nearest = _impl.assign_nearest
cluster_dist_sums = _impl.cluster_dist_sums
