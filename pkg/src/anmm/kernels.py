"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  Set ``ANMM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from anmm import _pykernels

BACKEND = "python"

if os.environ.get("ANMM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from anmm import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels
else:
    _impl = _pykernels

sigmoid = _impl.sigmoid
softmax = _impl.softmax
match_matrix = _impl.match_matrix
bin_rows = _impl.bin_rows
anmm1_forward = _impl.anmm1_forward
anmm2_forward = _impl.anmm2_forward
anmm1_triple = _impl.anmm1_triple
anmm2_triple = _impl.anmm2_triple

__all__ = [
    "BACKEND",
    "sigmoid",
    "softmax",
    "match_matrix",
    "bin_rows",
    "anmm1_forward",
    "anmm2_forward",
    "anmm1_triple",
    "anmm2_triple",
]
