# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR propagation kernels (OpenMP-parallel over vertices).

Both kernels evaluate the three-term per-vertex update: pull toward 0
by the class-0 edge-weight share, toward 1 by the class-1 share, plus
the weighted disagreement with unlabeled neighbors.  Per-vertex work is
sequential in row order, so results do not depend on the thread count.
"""

from cython.parallel cimport prange
from libc.math cimport fabs

import numpy as np

cimport numpy as cnp

cnp.import_array()

# Below this many frontier vertices the OpenMP fork/join costs more than
# the row work; the serial path computes the identical result.
DEF PARALLEL_CUTOFF = 1024


cdef inline double _update_one(
    const long long[::1] indptr,
    const long long[::1] indices,
    const double[::1] weights,
    const signed char[::1] gt,
    const double[::1] f,
    long long u,
    double* out_val,
) noexcept nogil:
    cdef long long e, v
    cdef double w, w_all = 0.0, w0 = 0.0, w1 = 0.0, s = 0.0
    cdef double fu = f[u]
    cdef double fn
    cdef signed char g
    for e in range(indptr[u], indptr[u + 1]):
        v = indices[e]
        w = weights[e]
        w_all += w
        g = gt[v]
        if g == 0:
            w0 += w
        elif g == 1:
            w1 += w
        else:
            s += (f[v] - fu) * w
    if w_all <= 0.0:
        out_val[0] = 0.5
        return -1.0
    fn = fu + (0.0 - fu) * (w0 / w_all) + (1.0 - fu) * (w1 / w_all) + s / w_all
    if fn < 0.0:
        fn = 0.0
    elif fn > 1.0:
        fn = 1.0
    out_val[0] = fn
    return fabs(fn - fu)


def jacobi_step(
    const long long[::1] indptr,
    const long long[::1] indices,
    const double[::1] weights,
    const signed char[::1] gt,
    const double[::1] f,
    const long long[::1] frontier,
    double[::1] out_vals,
    double[::1] out_deltas,
    int threads,
):
    """Evaluate updates for all frontier vertices against the current f.

    Writes candidate values to out_vals and |change| to out_deltas
    (sentinel -1.0 for vertices with no incident weight).  Commit is the
    caller's job, which keeps the step usable as a read-only residual
    check.
    """
    cdef Py_ssize_t i, n = frontier.shape[0]
    cdef double val
    if threads > 1 and n >= PARALLEL_CUTOFF:
        for i in prange(n, nogil=True, num_threads=threads, schedule="static"):
            out_deltas[i] = _update_one(
                indptr, indices, weights, gt, f, frontier[i], &out_vals[i]
            )
    else:
        with nogil:
            for i in range(n):
                out_deltas[i] = _update_one(
                    indptr, indices, weights, gt, f, frontier[i], &out_vals[i]
                )


def gauss_seidel_step(
    const long long[::1] indptr,
    const long long[::1] indices,
    const double[::1] weights,
    const signed char[::1] gt,
    double[::1] f,
    const long long[::1] frontier,
    double[::1] out_deltas,
):
    """Sequential in-place sweep over the frontier in ascending-id order."""
    cdef Py_ssize_t i, n = frontier.shape[0]
    cdef long long u
    cdef double val
    with nogil:
        for i in range(n):
            u = frontier[i]
            out_deltas[i] = _update_one(indptr, indices, weights, gt, f, u, &val)
            f[u] = val


def jacobi_run(
    const long long[::1] indptr,
    const long long[::1] indices,
    const double[::1] weights,
    const signed char[::1] gt,
    double[::1] f,
    frontier_init,
    unsigned char[::1] eligible,
    double delta,
    long long max_iters,
    int threads,
):
    """Fused frontier loop: rounds of evaluate/commit/expand until the
    frontier empties or the round budget runs out.

    Vertices moving more than delta stay in the frontier and pull in
    their eligible neighbors; kernel-detected isolated vertices are
    pinned to 0.5, dropped from eligibility, and counted as warnings.
    Returns (iterations, updates, last round's max change, warnings,
    leftover frontier ids) where a nonempty leftover means the budget
    ran out first.
    """
    cdef Py_ssize_t n = f.shape[0]
    init = np.asarray(frontier_init, dtype=np.int64)
    cur_arr = np.empty(n, dtype=np.int64)
    cur_arr[: init.shape[0]] = init
    cur_len0 = init.shape[0]
    nxt_arr = np.empty(n, dtype=np.int64)
    vals_arr = np.empty(n, dtype=np.float64)
    deltas_arr = np.empty(n, dtype=np.float64)
    flags_arr = np.zeros(n, dtype=np.uint8)

    cdef long long[::1] cur = cur_arr
    cdef long long[::1] nxt = nxt_arr
    cdef double[::1] vals = vals_arr
    cdef double[::1] deltas = deltas_arr
    cdef unsigned char[::1] in_next = flags_arr
    cdef Py_ssize_t cur_len = cur_len0, next_len, i
    cdef long long u, v, e, iterations = 0, updates = 0, warnings = 0
    cdef double d, round_max, max_change = 0.0

    while cur_len > 0 and iterations < max_iters:
        if threads > 1 and cur_len >= PARALLEL_CUTOFF:
            for i in prange(cur_len, nogil=True, num_threads=threads, schedule="static"):
                deltas[i] = _update_one(indptr, indices, weights, gt, f, cur[i], &vals[i])
        else:
            with nogil:
                for i in range(cur_len):
                    deltas[i] = _update_one(indptr, indices, weights, gt, f, cur[i], &vals[i])
        round_max = 0.0
        next_len = 0
        with nogil:
            for i in range(cur_len):
                u = cur[i]
                d = deltas[i]
                f[u] = vals[i]
                if d < 0.0:
                    warnings += 1
                    eligible[u] = 0
                    continue
                if d > round_max:
                    round_max = d
                if d > delta:
                    if in_next[u] == 0 and eligible[u] != 0:
                        in_next[u] = 1
                        nxt[next_len] = u
                        next_len += 1
                    for e in range(indptr[u], indptr[u + 1]):
                        v = indices[e]
                        if eligible[v] != 0 and in_next[v] == 0:
                            in_next[v] = 1
                            nxt[next_len] = v
                            next_len += 1
            updates += cur_len
            iterations += 1
            max_change = round_max
            for i in range(next_len):
                in_next[nxt[i]] = 0
        cur, nxt = nxt, cur
        cur_arr, nxt_arr = nxt_arr, cur_arr
        cur_len = next_len

    leftover = np.asarray(cur[:cur_len]).copy()
    return int(iterations), int(updates), float(max_change), int(warnings), leftover
