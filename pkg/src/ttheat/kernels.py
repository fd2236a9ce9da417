"""Kernel selection: the compiled extension when built, numpy otherwise.

Set ``TTHEAT_PURE_PYTHON=1`` to force the numpy versions.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("TTHEAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

thomas_batched = _impl.thomas_batched
apply_banded3 = _impl.apply_banded3
