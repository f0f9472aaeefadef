"""Backend selection for the shattering kernels.

The compiled module is used when it was built and ``ROBCERT_PURE_PYTHON`` is
unset; otherwise the pure-Python implementation is used.
"""

import os

from robcert import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("ROBCERT_PURE_PYTHON"):
    try:
        from robcert import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

vc_dimension = _impl.vc_dimension
shatters = _impl.shatters


def backends() -> dict:
    """All importable backends by name (for benchmarks and cross-checks)."""
    out = {"python": _kernels_py}
    try:
        from robcert import _kernels as compiled
    except ImportError:
        pass
    else:
        out["cython"] = compiled
    return out
