"""Backend selection for the hot kernels.

The compiled extension ``prevopt._kernels`` is used when it imports;
otherwise the numpy/pure-Python twins in ``prevopt._pykernels`` are used.
Set ``PREVOPT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("PREVOPT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

pfcm_sqdist = _impl.pfcm_sqdist
evaluate_options = _impl.evaluate_options
pairs_to_options = _impl.pairs_to_options
propagate_batch = _impl.propagate_batch
evaluate_batch = _impl.evaluate_batch

__all__ = [
    "BACKEND",
    "pfcm_sqdist",
    "evaluate_options",
    "pairs_to_options",
    "propagate_batch",
    "evaluate_batch",
]
