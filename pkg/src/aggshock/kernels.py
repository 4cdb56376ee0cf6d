"""Selects the compiled kernels when available, else the pure-Python ones.

Set ``AGGSHOCK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("AGGSHOCK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

education_shares = _impl.education_shares
share_residual = _impl.share_residual
ar1_path = _impl.ar1_path
THETA_CAP = python_backend.THETA_CAP

__all__ = ["BACKEND", "education_shares", "share_residual", "ar1_path", "THETA_CAP",
           "python_backend", "compiled_backend"]
