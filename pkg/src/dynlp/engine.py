"""Incremental label propagation over batched graph updates.

Each batch is processed in three phases: structural change adjustment
(deletes, then inserts, collecting the affected set), component-based
initialization of the new vertices, and frontier-driven iterative
propagation until no vertex moves by more than delta.

A vertex's update pulls it toward 0 by its class-0 edge-weight share,
toward 1 by its class-1 share, and toward its unlabeled neighbors by
their weighted disagreement; this equals the weighted average of all
neighbor labels with ground-truth vertices contributing their pinned
values.  Convergence is declared only after a read-only residual sweep
over every eligible vertex finds no move above delta, so asynchronous
frontier exits cannot leave stale residuals behind.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import kernels
from .components import ComponentLabeling, IntraBatchGraph, find_components
from .errors import ValidationError
from .graph import BatchUpdate, DynamicGraph, EdgeList
from .kernels import row_positions
from .labels import UNLABELED, LabelState

MODE_JACOBI = "parallel_jacobi"
MODE_GAUSS_SEIDEL = "sequential_gauss_seidel"

DEFAULT_DELTA = 1e-4
MAX_ITERATIONS_PER_VERTEX = 10


@dataclass
class EngineConfig:
    delta: float = DEFAULT_DELTA
    tau: Union[float, str] = "auto"
    max_iterations: Optional[int] = None  # None: 10x the alive vertex count
    mode: str = MODE_JACOBI
    threads: Optional[int] = None  # None: available parallelism
    component_init: bool = True  # False: plain 0.5 for inserted vertices

    def validate(self) -> None:
        if not self.delta > 0:
            raise ValidationError("delta must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.mode not in (MODE_JACOBI, MODE_GAUSS_SEIDEL):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if isinstance(self.tau, str):
            if self.tau != "auto":
                raise ValidationError("tau must be a number or 'auto'")
        elif self.tau < 0:
            raise ValidationError("tau must be nonnegative")

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        return os.cpu_count() or 1

    def resolved_max_iterations(self, num_alive: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return max(1, MAX_ITERATIONS_PER_VERTEX * num_alive)


@dataclass
class Frontier:
    """Sorted set of alive unlabeled vertices still requiring updates."""

    members: np.ndarray

    @classmethod
    def of(cls, ids) -> "Frontier":
        arr = np.unique(np.asarray(ids, dtype=np.int64))
        return cls(arr)

    @classmethod
    def empty(cls) -> "Frontier":
        return cls(np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.members.shape[0]

    def __contains__(self, u: int) -> bool:
        i = np.searchsorted(self.members, u)
        return i < len(self.members) and self.members[i] == u


@dataclass
class ComponentSummary:
    component_id: int
    w_to_class0: float
    w_to_class1: float
    member_count: int


@dataclass
class IterationReport:
    method: str = "dynlp"
    t: int = 0
    iterations: int = 0
    updates: int = 0
    max_change: float = 0.0
    converged: bool = True
    warnings: int = 0
    isolated_pinned: int = 0
    unreachable_pinned: int = 0
    wall_time_ms: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "t": self.t,
            "iterations": self.iterations,
            "updates": self.updates,
            "max_change": self.max_change,
            "converged": self.converged,
            "warnings": self.warnings,
            "isolated_pinned": self.isolated_pinned,
            "unreachable_pinned": self.unreachable_pinned,
            "wall_time_ms": self.wall_time_ms,
        }


@dataclass
class StructuralResult:
    """What a batch did to the graph, before any propagation."""

    affected_deletes: np.ndarray
    affected_inserts: np.ndarray
    inserted: np.ndarray


def apply_batch_structure(
    graph: DynamicGraph, labels: LabelState, batch: BatchUpdate
) -> StructuralResult:
    """Apply deletes then inserts and pin new ground truth; no propagation.

    Validates the whole batch first so a bad batch leaves the state
    untouched.  Fresh unlabeled vertices start at 0.5.
    """
    graph.validate_batch(batch)
    affected_del = graph.apply_deletes(batch.deletes)
    affected_ins = graph.apply_inserts(batch)
    labels.ensure_capacity(graph.num_slots)
    labeled = batch.insert_gt >= 0
    if labeled.any():
        labels.set_ground_truth(batch.insert_ids[labeled], batch.insert_gt[labeled])
    return StructuralResult(affected_del, affected_ins, batch.insert_ids)


def eligibility_mask(graph: DynamicGraph, labels: LabelState) -> np.ndarray:
    """Alive, unlabeled, positive degree: the vertices propagation may touch."""
    csr = graph.csr()
    mask = graph.alive & (labels.gt[: graph.num_slots] == UNLABELED)
    return mask & (csr.degrees > 0)


def reachable_mask(graph: DynamicGraph, labels: LabelState) -> np.ndarray:
    """Alive vertices connected (through any path) to some ground-truth vertex."""
    csr = graph.csr()
    reached = graph.alive & (labels.gt[: graph.num_slots] >= 0)
    frontier = np.flatnonzero(reached)
    while len(frontier):
        nbrs = csr.indices[row_positions(csr.indptr, frontier)]
        if len(nbrs) == 0:
            break
        nbrs = np.unique(nbrs)
        new = nbrs[~reached[nbrs]]
        reached[new] = True
        frontier = new
    return reached


def resolve_tau(graph: DynamicGraph, cfg: EngineConfig) -> float:
    if cfg.tau == "auto":
        edges = graph.live_edges()
        if len(edges) == 0:
            return 0.0
        return float(edges.w.mean())
    return float(cfg.tau)


def initialize_component_labels(
    graph: DynamicGraph, labels: LabelState, labeling: ComponentLabeling
) -> list[ComponentSummary]:
    """Seed inserted vertices from their component's pull toward each class.

    Every unlabeled member of a component gets
    0.5 - W0/(2(W0+W1)) + W1/(2(W0+W1)), the neutral midpoint shifted by
    the component's edge-weight share to each ground-truth class; 0.5
    when the component touches neither class.  Mutates labels in place
    and returns the per-component summaries.
    """
    nc = labeling.num_components
    if nc == 0:
        return []
    csr = graph.csr()
    verts = labeling.vertices
    counts = csr.indptr[verts + 1] - csr.indptr[verts]
    pos = row_positions(csr.indptr, verts, counts)
    nbr = csr.indices[pos]
    w = csr.weights[pos]
    g = labels.gt[nbr]
    seg = np.repeat(np.arange(len(verts)), counts)
    per0 = np.bincount(seg, weights=w * (g == 0), minlength=len(verts))
    per1 = np.bincount(seg, weights=w * (g == 1), minlength=len(verts))
    w0 = np.bincount(labeling.component_id, weights=per0, minlength=nc)
    w1 = np.bincount(labeling.component_id, weights=per1, minlength=nc)
    tot = w0 + w1
    safe = np.where(tot > 0, tot, 1.0)
    init = np.where(tot > 0, 0.5 - w0 / (2.0 * safe) + w1 / (2.0 * safe), 0.5)
    unlab = labels.gt[verts] == UNLABELED
    labels.f[verts[unlab]] = init[labeling.component_id[unlab]]
    sizes = np.bincount(labeling.component_id, minlength=nc)
    return [
        ComponentSummary(c, float(w0[c]), float(w1[c]), int(sizes[c])) for c in range(nc)
    ]


class _Propagator:
    """One batch's propagation loop over a fixed graph snapshot."""

    def __init__(
        self,
        graph: DynamicGraph,
        labels: LabelState,
        cfg: EngineConfig,
        eligible: np.ndarray,
    ) -> None:
        self.csr = graph.csr()
        self.labels = labels
        self.cfg = cfg
        self.eligible = eligible
        self.threads = cfg.resolved_threads()
        self._flags = np.zeros(graph.num_slots, dtype=bool)
        self.warnings = 0

    def restrict(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if len(ids) == 0:
            return ids
        ids = np.unique(ids)
        return ids[self.eligible[ids]]

    def step(self, frontier: np.ndarray) -> tuple[np.ndarray, float]:
        """One committed update round; returns (next frontier, max change)."""
        f = self.labels.f
        vals = np.empty(len(frontier), dtype=np.float64)
        deltas = np.empty(len(frontier), dtype=np.float64)
        if self.cfg.mode == MODE_JACOBI:
            kernels.jacobi_step(
                self.csr.indptr, self.csr.indices, self.csr.weights,
                self.labels.gt, f, frontier, vals, deltas, self.threads,
            )
            f[frontier] = vals
        else:
            kernels.gauss_seidel_step(
                self.csr.indptr, self.csr.indices, self.csr.weights,
                self.labels.gt, f, frontier, deltas,
            )
        isolated = deltas < 0.0
        if isolated.any():
            self.warnings += int(isolated.sum())
            self.eligible[frontier[isolated]] = False
        changed = frontier[deltas > self.cfg.delta]
        max_change = float(deltas.max(initial=0.0))
        return self.expand(changed), max_change

    def expand(self, changed: np.ndarray) -> np.ndarray:
        """Changed vertices stay in the frontier and pull in eligible neighbors."""
        if len(changed) == 0:
            return changed
        flags = self._flags
        flags[changed] = True
        nbrs = self.csr.indices[row_positions(self.csr.indptr, changed)]
        sel = nbrs[self.eligible[nbrs]]
        flags[sel] = True
        nxt = np.flatnonzero(flags).astype(np.int64)
        flags[nxt] = False
        return nxt

    def certify_round(self) -> tuple[np.ndarray, float, int]:
        """One committed round over every eligible vertex.

        If its largest move is at most delta, every committed residual is
        a convex combination of moves that small, so the state is a
        certified delta-fixed-point and the batch may stop.
        """
        ids = np.flatnonzero(self.eligible).astype(np.int64)
        if len(ids) == 0:
            return ids, 0.0, 0
        nxt, max_change = self.step(ids)
        return nxt, max_change, len(ids)


def propagate_step(
    graph: DynamicGraph,
    labels: LabelState,
    frontier: Frontier,
    delta: float,
    mode: str = MODE_JACOBI,
    threads: Optional[int] = None,
) -> tuple[LabelState, Frontier, float]:
    """One propagation round over the frontier; public single-step form.

    Returns the updated labels, the next frontier (vertices that moved
    by more than delta plus their eligible neighbors), and the largest
    move seen this round.
    """
    cfg = EngineConfig(delta=delta, mode=mode, threads=threads)
    cfg.validate()
    prop = _Propagator(graph, labels, cfg, eligibility_mask(graph, labels))
    members = np.unique(np.asarray(frontier.members, dtype=np.int64))
    # Keep isolated members: the kernel pins them to 0.5 and drops them.
    keep = graph.alive[members] & (labels.gt[members] == UNLABELED)
    nxt, max_change = prop.step(members[keep])
    return labels, Frontier(nxt), max_change


def apply_batch(
    graph: DynamicGraph,
    labels: LabelState,
    batch: BatchUpdate,
    cfg: EngineConfig,
) -> tuple[LabelState, IterationReport]:
    """Process one batch end to end: adjust, initialize, propagate."""
    cfg.validate()
    started = time.perf_counter()
    report = IterationReport(method="dynlp", t=batch.t)
    if batch.is_empty:
        report.wall_time_ms = (time.perf_counter() - started) * 1000.0
        return labels, report

    structural = apply_batch_structure(graph, labels, batch)

    tau = resolve_tau(graph, cfg)
    if cfg.component_init and len(structural.inserted):
        intra = IntraBatchGraph.build(structural.inserted, batch.insert_edges(), tau)
        labeling = find_components(intra)
        initialize_component_labels(graph, labels, labeling)

    reached = reachable_mask(graph, labels)
    csr = graph.csr()
    n = graph.num_slots
    unlabeled = graph.alive & (labels.gt[:n] == UNLABELED)
    unreachable = unlabeled & ~reached
    if unreachable.any():
        ids = np.flatnonzero(unreachable)
        labels.f[ids] = 0.5
        isolated = csr.degrees[ids] == 0
        report.isolated_pinned = int(isolated.sum())
        report.unreachable_pinned = int(len(ids) - report.isolated_pinned)
    eligible = unlabeled & reached

    prop = _Propagator(graph, labels, cfg, eligible)
    seeds = np.concatenate(
        [structural.affected_deletes, structural.affected_inserts]
    )
    frontier = prop.restrict(seeds)

    max_iter = cfg.resolved_max_iterations(graph.num_alive)
    iterations = 0
    updates = 0
    max_change = 0.0
    converged = True
    eligible_u8 = eligible.view(np.uint8)
    while True:
        if cfg.mode == MODE_JACOBI:
            # Fused driver: the whole evaluate/commit/expand loop runs in
            # the kernel backend, semantically identical to prop.step.
            it, upd, mc, warn, frontier = kernels.jacobi_run(
                prop.csr.indptr, prop.csr.indices, prop.csr.weights,
                labels.gt, labels.f, frontier, eligible_u8,
                cfg.delta, max_iter - iterations, prop.threads,
            )
            iterations += it
            updates += upd
            prop.warnings += warn
            if it:
                max_change = mc
        else:
            while len(frontier) and iterations < max_iter:
                updates += len(frontier)
                frontier, max_change = prop.step(frontier)
                iterations += 1
        if len(frontier) or iterations >= max_iter:
            converged = bool(len(frontier) == 0)
            if not converged:
                break
        frontier, mc, swept = prop.certify_round()
        if swept == 0:
            break
        iterations += 1
        updates += swept
        max_change = mc
        if mc <= cfg.delta:
            break

    report.iterations = iterations
    report.updates = updates
    report.max_change = max_change
    report.converged = converged
    report.warnings = prop.warnings + report.isolated_pinned + report.unreachable_pinned
    report.wall_time_ms = (time.perf_counter() - started) * 1000.0
    return labels, report


def run_batches(
    graph: DynamicGraph,
    labels: LabelState,
    batches,
    cfg: EngineConfig,
) -> list[IterationReport]:
    """Apply a batch sequence in order, returning one report per batch."""
    return [apply_batch(graph, labels, b, cfg)[1] for b in batches]
