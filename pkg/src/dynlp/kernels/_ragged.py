"""Ragged-row gather helpers shared by the fallback kernels and the engine."""

import numpy as np


def row_positions(indptr, rows, counts=None):
    """Flat positions into a CSR data array covering the given rows, in order.

    Rows with zero entries contribute nothing; pass precomputed counts to
    skip recomputing them.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if counts is None:
        counts = indptr[rows + 1] - indptr[rows]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    starts = indptr[rows]
    ends = np.cumsum(counts)
    return np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts) + np.repeat(starts, counts)


def gather_neighbors(indptr, indices, rows):
    """Concatenated neighbor ids of the given rows."""
    return indices[row_positions(indptr, rows)]
