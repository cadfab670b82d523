"""Backend selection for the hot kernels.

The compiled extension ``bromimo._ext`` is used when it imports cleanly;
otherwise the numpy implementations in ``bromimo._pykernels`` are used.
Setting ``BROMIMO_PURE_PYTHON=1`` forces the fallback.
"""

import os

from bromimo import _pykernels

if os.environ.get("BROMIMO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from bromimo import _ext as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

box_qp_apg = _impl.box_qp_apg
saddle_sum = _impl.saddle_sum
projected_gradient_norm = _impl.projected_gradient_norm

__all__ = ["BACKEND", "box_qp_apg", "saddle_sum", "projected_gradient_norm"]
