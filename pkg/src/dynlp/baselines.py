"""Reference solvers: full-sweep iteration, closed-form harmonic solve,
and the two-representative short-circuit reduction.

These serve both as comparison subjects in the harness and as
correctness oracles for the incremental engine.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels
from .engine import (
    EngineConfig,
    IterationReport,
    apply_batch_structure,
    eligibility_mask,
)
from .errors import ValidationError
from .graph import BatchUpdate, DynamicGraph, EdgeList
from .kernels import row_positions
from .labels import UNLABELED, LabelState

DENSE_SOLVE_CAP = 5000


# -- closed-form harmonic solution -------------------------------------------


@dataclass
class LaplacianBlocks:
    """Dense Laplacian blocks under a labeled-first vertex ordering.

    ordering lists alive vertex ids, all labeled ones first; l_uu is the
    unlabeled-by-unlabeled block and l_ul the unlabeled-by-labeled block
    of L = D - W restricted to alive vertices.
    """

    ordering: np.ndarray
    num_labeled: int
    l_uu: np.ndarray
    l_ul: np.ndarray


def build_laplacian_blocks(graph: DynamicGraph, labels: LabelState) -> LaplacianBlocks:
    alive = graph.alive_ids()
    gt = labels.gt[alive]
    lab = alive[gt >= 0]
    unl = alive[gt == UNLABELED]
    if len(unl) > DENSE_SOLVE_CAP:
        raise ValidationError(
            f"{len(unl)} unlabeled vertices exceed the dense-solve cap {DENSE_SOLVE_CAP}"
        )
    ordering = np.concatenate([lab, unl])
    pos = np.full(graph.num_slots, -1, dtype=np.int64)
    pos[ordering] = np.arange(len(ordering))
    nl, nu = len(lab), len(unl)
    l_uu = np.zeros((nu, nu), dtype=np.float64)
    l_ul = np.zeros((nu, nl), dtype=np.float64)
    edges = graph.live_edges()
    for a, b, w in zip(edges.u, edges.v, edges.w):
        ia, ib = pos[a], pos[b]
        for x, y in ((ia, ib), (ib, ia)):
            if x >= nl:
                if y >= nl:
                    l_uu[x - nl, y - nl] -= w
                else:
                    l_ul[x - nl, y] -= w
    deg = graph.csr().degrees
    for i, u in enumerate(unl):
        l_uu[i, i] = deg[u]
    return LaplacianBlocks(ordering=ordering, num_labeled=nl, l_uu=l_uu, l_ul=l_ul)


def _local_csr(n: int, edges: EdgeList):
    both_u = np.concatenate([edges.u, edges.v])
    both_v = np.concatenate([edges.v, edges.u])
    both_w = np.concatenate([edges.w, edges.w])
    counts = np.bincount(both_u, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    order = np.argsort(both_u, kind="stable")
    return indptr, both_v[order], both_w[order]


def _reachable_local(n: int, edges: EdgeList, seeds: np.ndarray) -> np.ndarray:
    reached = np.zeros(n, dtype=bool)
    reached[seeds] = True
    if len(edges) == 0:
        return reached
    indptr, indices, _ = _local_csr(n, edges)
    frontier = np.asarray(seeds, dtype=np.int64)
    while len(frontier):
        nbrs = indices[row_positions(indptr, frontier)]
        if len(nbrs) == 0:
            break
        nbrs = np.unique(nbrs)
        new = nbrs[~reached[nbrs]]
        reached[new] = True
        frontier = new
    return reached


def harmonic_dense(
    n: int,
    edges: EdgeList,
    pinned_ids: np.ndarray,
    pinned_values: np.ndarray,
    dense_cap: int = DENSE_SOLVE_CAP,
) -> tuple[np.ndarray, int]:
    """Exact harmonic extension of pinned values over an edge list.

    Returns (values for all n vertices, count pinned to the 0.5 fallback
    because no path connects them to a pinned vertex).
    """
    if len(pinned_ids) == 0:
        raise ValidationError("harmonic solve requires at least one pinned vertex")
    f = np.full(n, 0.5, dtype=np.float64)
    f[pinned_ids] = pinned_values
    pinned = np.zeros(n, dtype=bool)
    pinned[pinned_ids] = True
    reached = _reachable_local(n, edges, np.asarray(pinned_ids, dtype=np.int64))
    free = reached & ~pinned
    m = int(free.sum())
    fallback = int((~reached).sum())
    if m == 0:
        return f, fallback
    if m > dense_cap:
        raise ValidationError(f"{m} free vertices exceed the dense-solve cap {dense_cap}")
    idx = np.full(n, -1, dtype=np.int64)
    idx[free] = np.arange(m)
    a = np.zeros((m, m), dtype=np.float64)
    b = np.zeros(m, dtype=np.float64)
    deg = np.zeros(m, dtype=np.float64)
    for x, y in ((edges.u, edges.v), (edges.v, edges.u)):
        fx = free[x]
        np.add.at(deg, idx[x[fx]], edges.w[fx])
        both = fx & free[y]
        np.subtract.at(a, (idx[x[both]], idx[y[both]]), edges.w[both])
        top = fx & pinned[y]
        np.add.at(b, idx[x[top]], edges.w[top] * f[y[top]])
    a[np.arange(m), np.arange(m)] = deg
    try:
        x = scipy.linalg.solve(a, b, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"harmonic system singular on {m} free vertices "
            f"(min degree {deg.min():.3g}); this should not happen on a "
            "boundary-connected component"
        ) from exc
    f[free] = np.clip(x, 0.0, 1.0)
    return f, fallback


def harmonic_solve(
    graph: DynamicGraph,
    labels: LabelState,
    dense_cap: int = DENSE_SOLVE_CAP,
    return_info: bool = False,
):
    """Closed-form labels for the current graph; unreachable vertices get 0.5."""
    alive = graph.alive_ids()
    gt = labels.gt[alive]
    pinned_ids = alive[gt >= 0]
    if len(pinned_ids) == 0:
        raise ValidationError("harmonic solve requires at least one ground-truth vertex")
    # Work in a compact alive-only index space, then scatter back.
    local = np.full(graph.num_slots, -1, dtype=np.int64)
    local[alive] = np.arange(len(alive))
    edges = graph.live_edges()
    ledges = EdgeList(local[edges.u], local[edges.v], edges.w)
    vals, fallback = harmonic_dense(
        len(alive), ledges, local[pinned_ids], labels.f[pinned_ids], dense_cap
    )
    f = np.full(graph.num_slots, 0.5, dtype=np.float64)
    f[alive] = vals
    if return_info:
        return f, {"unreachable_pinned": fallback}
    return f


# -- iterative full recomputation ---------------------------------------------


def itlp_solve(
    graph: DynamicGraph,
    labels: LabelState,
    delta: float,
    max_iterations: Optional[int] = None,
    threads: Optional[int] = None,
) -> tuple[LabelState, IterationReport]:
    """Synchronous full-graph sweeps from the given labels until quiescent.

    Every alive unlabeled vertex with positive degree is updated each
    sweep; isolated ones are pinned to 0.5 and skipped.
    """
    cfg = EngineConfig(delta=delta, max_iterations=max_iterations, threads=threads)
    cfg.validate()
    started = time.perf_counter()
    report = IterationReport(method="itlp")
    csr = graph.csr()
    active_mask = eligibility_mask(graph, labels)
    isolated = graph.alive & (labels.gt[: graph.num_slots] == UNLABELED) & (csr.degrees == 0)
    if isolated.any():
        labels.f[np.flatnonzero(isolated)] = 0.5
        report.isolated_pinned = int(isolated.sum())
        report.warnings = report.isolated_pinned
    active = np.flatnonzero(active_mask).astype(np.int64)
    max_iter = cfg.resolved_max_iterations(graph.num_alive)
    threads_n = cfg.resolved_threads()
    vals = np.empty(len(active), dtype=np.float64)
    deltas = np.empty(len(active), dtype=np.float64)
    max_change = 0.0
    converged = len(active) == 0
    while report.iterations < max_iter and not converged:
        kernels.jacobi_step(
            csr.indptr, csr.indices, csr.weights,
            labels.gt, labels.f, active, vals, deltas, threads_n,
        )
        labels.f[active] = vals
        report.iterations += 1
        report.updates += len(active)
        max_change = float(deltas.max(initial=0.0))
        converged = max_change <= delta
    report.max_change = max_change
    report.converged = converged
    report.wall_time_ms = (time.perf_counter() - started) * 1000.0
    return labels, report


def itlp_batch_solve(
    graph: DynamicGraph,
    labels: LabelState,
    batch: BatchUpdate,
    cfg: EngineConfig,
) -> tuple[LabelState, IterationReport]:
    """Apply a batch structurally, then recompute by full sweeps.

    Surviving vertices keep their labels and fresh unlabeled ones start
    at 0.5, mirroring the incremental engine's starting conditions so
    iteration counts isolate the frontier restriction.
    """
    started = time.perf_counter()
    apply_batch_structure(graph, labels, batch)
    labels, report = itlp_solve(graph, labels, cfg.delta, cfg.max_iterations, cfg.threads)
    report.t = batch.t
    report.wall_time_ms = (time.perf_counter() - started) * 1000.0
    return labels, report


# -- short-circuit reduction ---------------------------------------------------


@dataclass
class ReducedGraph:
    """Unlabeled vertices plus one representative per ground-truth class.

    Local ids: rep0 = 0, rep1 = 1, unlabeled vertices 2..n_local-1 in
    ascending original-id order (orig_unlabeled maps them back).
    """

    n_local: int
    edges: EdgeList
    orig_unlabeled: np.ndarray

    REP0 = 0
    REP1 = 1

    def local_of(self, orig: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.orig_unlabeled, orig) + 2


def stlp_reduce(graph: DynamicGraph, labels: LabelState) -> ReducedGraph:
    """Contract each ground-truth class to one representative with parallel-edge sums."""
    class0 = labels.class_ids(graph, 0)
    class1 = labels.class_ids(graph, 1)
    if len(class0) == 0 or len(class1) == 0:
        raise ValidationError("short-circuit contraction requires both classes nonempty")
    unl = labels.unlabeled_ids(graph)
    n_local = len(unl) + 2
    local = np.full(graph.num_slots, -1, dtype=np.int64)
    local[unl] = np.arange(len(unl)) + 2
    gt = labels.gt
    edges = graph.live_edges()
    ug = gt[edges.u]
    vg = gt[edges.v]
    both_unl = (ug == UNLABELED) & (vg == UNLABELED)
    eu = [local[edges.u[both_unl]]]
    ev = [local[edges.v[both_unl]]]
    ew = [edges.w[both_unl]]
    acc = {0: np.zeros(len(unl)), 1: np.zeros(len(unl))}
    for x, xg, y in ((edges.u, ug, edges.v), (edges.v, vg, edges.u)):
        xu = xg == UNLABELED
        for cls in (0, 1):
            sel = xu & (gt[y] == cls)
            np.add.at(acc[cls], local[x[sel]] - 2, edges.w[sel])
    for cls, rep in ((0, ReducedGraph.REP0), (1, ReducedGraph.REP1)):
        nz = acc[cls] > 0
        eu.append(np.flatnonzero(nz) + 2)
        ev.append(np.full(int(nz.sum()), rep, dtype=np.int64))
        ew.append(acc[cls][nz])
    return ReducedGraph(
        n_local=n_local,
        edges=EdgeList(
            np.concatenate(eu).astype(np.int64),
            np.concatenate(ev).astype(np.int64),
            np.concatenate(ew),
        ),
        orig_unlabeled=unl,
    )


def stlp_solve(
    graph: DynamicGraph,
    labels: LabelState,
    dense_cap: int = DENSE_SOLVE_CAP,
) -> LabelState:
    """Recompute all unlabeled labels from scratch on the reduced graph."""
    reduced = stlp_reduce(graph, labels)
    pinned_ids = np.array([ReducedGraph.REP0, ReducedGraph.REP1], dtype=np.int64)
    pinned_vals = np.array([0.0, 1.0])
    vals, _ = harmonic_dense(reduced.n_local, reduced.edges, pinned_ids, pinned_vals, dense_cap)
    labels.f[reduced.orig_unlabeled] = vals[2:]
    return labels


def stlp_batch_solve(
    graph: DynamicGraph,
    labels: LabelState,
    batch: BatchUpdate,
    cfg: EngineConfig,
    dense_cap: int = DENSE_SOLVE_CAP,
) -> tuple[LabelState, IterationReport]:
    """Apply a batch, rebuild the reduced graph, and solve it exactly."""
    started = time.perf_counter()
    apply_batch_structure(graph, labels, batch)
    labels = stlp_solve(graph, labels, dense_cap)
    report = IterationReport(
        method="stlp",
        t=batch.t,
        iterations=1,
        updates=int(len(labels.unlabeled_ids(graph))),
        converged=True,
    )
    report.wall_time_ms = (time.perf_counter() - started) * 1000.0
    return labels, report


def oracle_batch_solve(
    graph: DynamicGraph,
    labels: LabelState,
    batch: BatchUpdate,
    cfg: EngineConfig,
    dense_cap: int = DENSE_SOLVE_CAP,
) -> tuple[LabelState, IterationReport]:
    """Apply a batch and recompute the closed-form solution on the full graph."""
    started = time.perf_counter()
    apply_batch_structure(graph, labels, batch)
    f = harmonic_solve(graph, labels, dense_cap)
    unl = labels.unlabeled_ids(graph)
    labels.f[unl] = f[unl]
    report = IterationReport(
        method="oracle", t=batch.t, iterations=1, updates=int(len(unl)), converged=True
    )
    report.wall_time_ms = (time.perf_counter() - started) * 1000.0
    return labels, report
