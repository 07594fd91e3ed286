"""Kernel backend selection.

Imports the compiled kernels when the extension is available, otherwise the
pure-numpy fallback. Both produce bit-identical output, so the choice only
affects speed. Set PRUNEKIT_BACKEND=numpy (or =compiled) to force one.

Also hosts the fixed-order reduction helpers shared by both backends.
"""

import os

import numpy as np

from . import _kernels_py
from .errors import UsageError

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_forced = os.environ.get("PRUNEKIT_BACKEND", "")
if _forced == "numpy":
    _impl = _kernels_py
elif _forced == "compiled":
    if _compiled is None:
        raise UsageError("PRUNEKIT_BACKEND=compiled but the extension is not built")
    _impl = _compiled
elif _forced:
    raise UsageError(f"unknown PRUNEKIT_BACKEND {_forced!r}")
else:
    _impl = _compiled if _compiled is not None else _kernels_py

BACKEND = "compiled" if _impl is _compiled else "numpy"


def backends():
    """Mapping of available backend name -> kernel module (for benchmarks/tests)."""
    avail = {"numpy": _kernels_py}
    if _compiled is not None:
        avail["compiled"] = _compiled
    return avail


def _f32(a):
    return np.ascontiguousarray(a, dtype=np.float32)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def matmul_nn(a, b):
    return _impl.matmul_nn(_f32(a), _f32(b))


def matmul_tn(a, b):
    return _impl.matmul_tn(_f32(a), _f32(b))


def matmul_nt(a, b):
    return _impl.matmul_nt(_f32(a), _f32(b))


def colsum(a):
    return _impl.colsum(_f32(a))


def sqdist(x, c):
    return _impl.sqdist(_f64(x), _f64(c))


def cluster_sums(x, labels, k):
    return _impl.cluster_sums(_f64(x), np.ascontiguousarray(labels, dtype=np.int64), k)


def seqsum(v):
    """Ascending-order scalar sum of a 1-D array (dtype preserved)."""
    v = np.asarray(v)
    if v.size == 0:
        return v.dtype.type(0)
    return np.cumsum(v)[-1]


def seqsum_rows(a):
    """Ascending-order sum along axis 1 (dtype preserved)."""
    a = np.asarray(a)
    if a.shape[1] == 0:
        return np.zeros(a.shape[0], dtype=a.dtype)
    return np.cumsum(a, axis=1)[:, -1]
