"""Pure-numpy kernels: the reference semantics for the hot loops.

Every kernel accumulates in a fixed order (ascending along the contraction
axis) using plain IEEE-754 ops, so results are bit-identical to the compiled
twin in ``_kernels.pyx`` and reproducible across machines. Matrix kernels
work in float32; distance/centroid kernels in float64.

Shapes use C-contiguous arrays; callers go through ``backend`` wrappers that
enforce dtype and contiguity.
"""

import numpy as np


def matmul_nn(a, b):
    """(n,k) @ (k,m) in float32, accumulating over k in ascending order."""
    n, k = a.shape
    m = b.shape[1]
    out = np.zeros((n, m), dtype=np.float32)
    for t in range(k):
        out += a[:, t, None] * b[t, None, :]
    return out


def matmul_tn(a, b):
    """(k,n).T @ (k,m) -> (n,m), accumulating over k (rows) ascending."""
    k, n = a.shape
    m = b.shape[1]
    out = np.zeros((n, m), dtype=np.float32)
    for t in range(k):
        out += a[t, :, None] * b[t, None, :]
    return out


def matmul_nt(a, b):
    """(n,k) @ (m,k).T -> (n,m), accumulating over k ascending."""
    n, k = a.shape
    m = b.shape[0]
    out = np.zeros((n, m), dtype=np.float32)
    for t in range(k):
        out += a[:, t, None] * b[None, :, t]
    return out


def colsum(a):
    """Sum of rows, float32, row index ascending."""
    n, m = a.shape
    out = np.zeros(m, dtype=np.float32)
    for i in range(n):
        out += a[i]
    return out


def sqdist(x, c):
    """Pairwise squared Euclidean distances (n,d) x (k,d) -> (n,k), float64.

    Accumulates over the coordinate axis in ascending order.
    """
    n, d = x.shape
    k = c.shape[0]
    out = np.zeros((n, k), dtype=np.float64)
    for t in range(d):
        diff = x[:, t, None] - c[None, :, t]
        out += diff * diff
    return out


def cluster_sums(x, labels, k):
    """Per-cluster coordinate sums and member counts, point index ascending.

    x: (n,d) float64, labels: (n,) int64 in [0,k). Returns (sums (k,d) f64,
    counts (k,) i64).
    """
    n, d = x.shape
    sums = np.zeros((k, d), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        sums[labels[i]] += x[i]
        counts[labels[i]] += 1
    return sums, counts
