"""Root-finding kernels with a compiled core and a pure-Python fallback.

The compiled Cython module is preferred when it was built; set the
environment variable ``ARCM_PURE_PYTHON=1`` to force the numpy fallback
(used by the benchmark in ``benchmarks/bench_kernels.py``).
"""

import os

from . import _secular_py

if os.environ.get("ARCM_PURE_PYTHON"):
    _impl = _secular_py
    BACKEND = "python"
else:
    try:
        from . import _secular as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _secular_py
        BACKEND = "python"

STATUS_OK = _secular_py.STATUS_OK
STATUS_COLLAPSED = _secular_py.STATUS_COLLAPSED
STATUS_MAXITER = _secular_py.STATUS_MAXITER

crs_root = _impl.crs_root
trs_root = _impl.trs_root
