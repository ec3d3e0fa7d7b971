"""Backend selection for the index hashing kernels.

The compiled ``_speedups`` module is used when it imports; setting
``DVFS_PURE_PYTHON=1`` forces the pure-Python implementation.
"""
import os

from dvfs import _purekernels

if os.environ.get("DVFS_PURE_PYTHON"):
    _impl = _purekernels
else:
    try:
        from dvfs import _speedups as _impl
    except ImportError:
        _impl = _purekernels

BACKEND = "compiled" if _impl is not _purekernels else "python"

node_key = _impl.node_key
path_keys = _impl.path_keys
surviving = _impl.surviving
