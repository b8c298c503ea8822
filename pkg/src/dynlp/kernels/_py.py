"""Pure-numpy fallback for the CSR propagation kernels.

Same contract as the compiled module: jacobi_step evaluates without
committing, gauss_seidel_step commits in ascending-id order.  The
`threads` argument is accepted for signature parity and ignored.
"""

import numpy as np

from ._ragged import row_positions

_ISOLATED = -1.0


def jacobi_step(indptr, indices, weights, gt, f, frontier, out_vals, out_deltas, threads=1):
    n = frontier.shape[0]
    if n == 0:
        return
    counts = indptr[frontier + 1] - indptr[frontier]
    nz = counts > 0
    if not nz.all():
        out_vals[~nz] = 0.5
        out_deltas[~nz] = _ISOLATED
        rows = frontier[nz]
        counts = counts[nz]
    else:
        rows = frontier
    if rows.shape[0] == 0:
        return
    pos = row_positions(indptr, rows, counts)
    nbr = indices[pos]
    w = weights[pos]
    g = gt[nbr]
    fu = np.repeat(f[rows], counts)
    bounds = np.zeros(rows.shape[0], dtype=np.int64)
    np.cumsum(counts[:-1], out=bounds[1:])
    w_all = np.add.reduceat(w, bounds)
    w0 = np.add.reduceat(w * (g == 0), bounds)
    w1 = np.add.reduceat(w * (g == 1), bounds)
    s = np.add.reduceat((f[nbr] - fu) * w * (g == -1), bounds)
    frows = f[rows]
    fn = frows + (0.0 - frows) * (w0 / w_all) + (1.0 - frows) * (w1 / w_all) + s / w_all
    np.clip(fn, 0.0, 1.0, out=fn)
    # Stored edge weights are strictly positive, so w_all > 0 whenever
    # the row is nonempty; guard against degenerate input anyway.
    dead = w_all <= 0.0
    if dead.any():
        fn[dead] = 0.5
    deltas = np.abs(fn - frows)
    deltas[dead] = _ISOLATED
    if nz.all():
        out_vals[:] = fn
        out_deltas[:] = deltas
    else:
        out_vals[nz] = fn
        out_deltas[nz] = deltas


def jacobi_run(indptr, indices, weights, gt, f, frontier_init, eligible, delta, max_iters, threads=1):
    """Frontier loop with the same contract as the compiled driver."""
    eligible_bool = eligible.view(bool)
    frontier = np.asarray(frontier_init, dtype=np.int64)
    flags = np.zeros(f.shape[0], dtype=bool)
    iterations = 0
    updates = 0
    warnings = 0
    max_change = 0.0
    while len(frontier) and iterations < max_iters:
        vals = np.empty(len(frontier), dtype=np.float64)
        deltas = np.empty(len(frontier), dtype=np.float64)
        jacobi_step(indptr, indices, weights, gt, f, frontier, vals, deltas, threads)
        f[frontier] = vals
        isolated = deltas < 0.0
        if isolated.any():
            warnings += int(isolated.sum())
            eligible_bool[frontier[isolated]] = False
        updates += len(frontier)
        iterations += 1
        max_change = float(deltas.max(initial=0.0))
        changed = frontier[deltas > delta]
        if len(changed) == 0:
            frontier = changed
            break
        flags[changed[eligible_bool[changed]]] = True
        nbrs = indices[row_positions(indptr, changed)]
        sel = nbrs[eligible_bool[nbrs]]
        flags[sel] = True
        frontier = np.flatnonzero(flags).astype(np.int64)
        flags[frontier] = False
    return iterations, updates, max_change, warnings, frontier


def gauss_seidel_step(indptr, indices, weights, gt, f, frontier, out_deltas):
    for i in range(frontier.shape[0]):
        u = frontier[i]
        lo, hi = indptr[u], indptr[u + 1]
        nbr = indices[lo:hi]
        w = weights[lo:hi]
        w_all = w.sum()
        if w_all <= 0.0:
            f[u] = 0.5
            out_deltas[i] = _ISOLATED
            continue
        g = gt[nbr]
        fu = f[u]
        w0 = w[g == 0].sum()
        w1 = w[g == 1].sum()
        unl = g == -1
        s = ((f[nbr[unl]] - fu) * w[unl]).sum()
        fn = fu + (0.0 - fu) * (w0 / w_all) + (1.0 - fu) * (w1 / w_all) + s / w_all
        fn = min(1.0, max(0.0, fn))
        f[u] = fn
        out_deltas[i] = abs(fn - fu)
