"""Hot inner loops for the stationary-distribution recursions.

The transition matrix is stored transposed in CSR form (row i holds the
probabilities of edges arriving at i), with dangling source rows kept
out of the sparse structure: their mass is redistributed through the
restart vector analytically inside each step. Compiled with numba when
available; the pure-Python definitions are used as-is otherwise, with
identical summation order, so results are bit-equal either way.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, but keep a fallback
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def pt_apply(indptr, src, data, dangling, pi0, x, out):
    """out <- P^T x, dangling rows contributing through pi0."""
    mass = 0.0
    for d in range(dangling.shape[0]):
        mass += x[dangling[d]]
    for i in range(out.shape[0]):
        acc = mass * pi0[i]
        for e in range(indptr[i], indptr[i + 1]):
            acc += data[e] * x[src[e]]
        out[i] = acc


@njit(cache=True)
def pt_apply_mat(indptr, src, data, dangling, pi0, x, out):
    """out <- P^T X for a dense (p, m) matrix X."""
    m = x.shape[1]
    for j in range(m):
        mass = 0.0
        for d in range(dangling.shape[0]):
            mass += x[dangling[d], j]
        for i in range(out.shape[0]):
            acc = mass * pi0[i]
            for e in range(indptr[i], indptr[i + 1]):
                acc += data[e] * x[src[e], j]
            out[i, j] = acc


@njit(cache=True)
def series_sum(indptr, src, data, dangling, pi0, alpha, n_steps):
    """Truncated weighted geometric series sum_{k<=N} (1-a)^k (P^T)^k pi0.

    Returns the unnormalized accumulator; the caller divides by
    1 - (1-alpha)^(N+1) and multiplies by alpha.
    """
    p = pi0.shape[0]
    cur = pi0.copy()
    nxt = np.empty(p)
    acc = pi0.copy()
    a = 1.0 - alpha
    for _ in range(n_steps):
        pt_apply(indptr, src, data, dangling, pi0, cur, nxt)
        for i in range(p):
            acc[i] += a * nxt[i]
            cur[i] = nxt[i]
        a *= 1.0 - alpha
    return acc


@njit(cache=True)
def power_iterate(indptr, src, data, dangling, pi0, alpha, n_steps):
    """N fixed-point steps pi <- alpha pi0 + (1-alpha) P^T pi from pi0."""
    p = pi0.shape[0]
    cur = pi0.copy()
    nxt = np.empty(p)
    for _ in range(n_steps):
        pt_apply(indptr, src, data, dangling, pi0, cur, nxt)
        for i in range(p):
            cur[i] = alpha * pi0[i] + (1.0 - alpha) * nxt[i]
    return cur


@njit(cache=True)
def series_sum_mat(indptr, src, data, dangling, pi0, alpha, n_steps, seed_mat):
    """Matrix analogue of series_sum, seeded from a dense (p, m) matrix."""
    p, m = seed_mat.shape
    cur = seed_mat.copy()
    nxt = np.empty((p, m))
    acc = seed_mat.copy()
    a = 1.0 - alpha
    for _ in range(n_steps):
        pt_apply_mat(indptr, src, data, dangling, pi0, cur, nxt)
        for i in range(p):
            for j in range(m):
                acc[i, j] += a * nxt[i, j]
                cur[i, j] = nxt[i, j]
        a *= 1.0 - alpha
    return acc


@njit(cache=True)
def fixed_point_mat(indptr, src, data, dangling, pi0, alpha, n_steps, seed_mat):
    """N steps of X <- seed + (1-alpha) P^T X from X = seed (dense p x m)."""
    p, m = seed_mat.shape
    cur = seed_mat.copy()
    nxt = np.empty((p, m))
    for _ in range(n_steps):
        pt_apply_mat(indptr, src, data, dangling, pi0, cur, nxt)
        for i in range(p):
            for j in range(m):
                cur[i, j] = seed_mat[i, j] + (1.0 - alpha) * nxt[i, j]
    return cur
