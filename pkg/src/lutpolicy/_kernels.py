"""Fused kernels for the LUT-expectation forward/backward.

The relaxed layer semantics are defined by the pure-numpy routines in
`lutnet`; these kernels compute the same quantities without materializing
the (batch, width, 2**k) address-probability tensor, which is what makes
batched training runs affordable on a CPU. The kernels run on the calling
thread: a private thread pool would fight the BLAS pool for cores, and
serial execution keeps results bit-deterministic everywhere.

If numba is unavailable the package falls back to the numpy path; see
`lutnet._expect_forward` / `lutnet._expect_backward`.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap


@njit(cache=True)
def expect_forward(p, m, out):
    """out[b, w] = sum_a m[w, a] * prod_j p[b,w,j]^a_j (1-p)^(1-a_j)."""
    n_batch, width, k = p.shape
    n_addr = m.shape[1]
    for w in range(width):
        wloc = np.empty(n_addr)
        for b in range(n_batch):
            wloc[0] = 1.0
            size = 1
            for j in range(k):
                pj = p[b, w, j]
                for a in range(size):
                    t = wloc[a]
                    wloc[a + size] = t * pj
                    wloc[a] = t - t * pj
                size *= 2
            acc = 0.0
            for a in range(n_addr):
                acc += wloc[a] * m[w, a]
            out[b, w] = acc


@njit(cache=True)
def expect_backward(p, m, upstream, d_weights, dp):
    """Batch-summed address weights and per-slot derivatives.

    d_weights[w, a] = sum_b upstream[b, w] * weight(b, w, a)
    dp[b, w, j]     = d out[b, w] / d p[b, w, j]

    The per-sample address weights are recomputed by the doubling recursion
    (stages saved locally); the slot derivatives come from the matching
    halving recursion over the table entries.
    """
    n_batch, width, k = p.shape
    n_addr = m.shape[1]
    for w in range(width):
        wloc = np.empty(n_addr)
        stages = np.empty(n_addr)
        floc = np.empty(n_addr)
        for a in range(n_addr):
            d_weights[w, a] = 0.0
        for b in range(n_batch):
            u = upstream[b, w]
            wloc[0] = 1.0
            size = 1
            off = 0
            for j in range(k):
                for a in range(size):
                    stages[off + a] = wloc[a]
                pj = p[b, w, j]
                for a in range(size):
                    t = wloc[a]
                    wloc[a + size] = t * pj
                    wloc[a] = t - t * pj
                off += size
                size *= 2
            for a in range(n_addr):
                d_weights[w, a] += u * wloc[a]
            for a in range(n_addr):
                floc[a] = m[w, a]
            for j in range(k - 1, -1, -1):
                half = 1 << j
                off -= half
                s = 0.0
                pj = p[b, w, j]
                for lo in range(half):
                    fl = floc[lo]
                    fh = floc[lo + half]
                    s += stages[off + lo] * (fh - fl)
                    floc[lo] = fl + pj * (fh - fl)
                dp[b, w, j] = s
