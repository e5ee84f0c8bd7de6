"""Kernel backend selection.

The compiled extension is preferred when it imports; otherwise the
pure-Python twin takes over.  IRBP_PURE_PYTHON=1 forces the fallback
(used by the benchmark and the cross-backend tests).
"""

import os

from . import pure

if os.environ.get("IRBP_PURE_PYTHON"):
    _backend = pure
else:
    try:
        from . import _ext as _backend
    except ImportError:
        _backend = pure

BACKEND = _backend.NAME
simulate_replica = _backend.simulate_replica
expected_counts = _backend.expected_counts
mean_field_loglik = _backend.mean_field_loglik


def get_backend(name=None):
    """Return a kernel module by name ("compiled" or "pure-python");
    default is the selected one."""
    if name is None or name == BACKEND:
        return _backend
    if name == pure.NAME:
        return pure
    if name == "compiled":
        from . import _ext
        return _ext
    raise ValueError(f"unknown kernel backend: {name!r}")
