"""Hot grid kernels, compiled with numba when available.

Set ``CXD_DISABLE_NUMBA=1`` to force the pure-numpy path.  Both paths
produce identical bits for enhance, suppress, composite and blend.
"""

import os

from . import _numpy

BACKEND = "numpy"

if os.environ.get("CXD_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on"):
    try:
        from . import _numba as _impl
        BACKEND = "numba"
    except ImportError:  # numba missing
        _impl = _numpy
else:
    _impl = _numpy

enhance = _impl.enhance
suppress = _impl.suppress
composite = _impl.composite
blend = _impl.blend
attention = _impl.attention

__all__ = ["BACKEND", "enhance", "suppress", "composite", "blend", "attention"]
