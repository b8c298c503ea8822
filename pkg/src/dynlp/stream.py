"""Turn a full graph plus ground truth into a replayable batch sequence.

Batch 0 reveals the initial ground-truth seeds; every later batch mixes
unlabeled inserts, ground-truth inserts, and deletions of currently
alive vertices in the configured proportions.  Vertices are renumbered
by reveal order (the engine requires contiguous fresh ids per batch);
the result carries the stream-id -> source-id map.  An edge enters the
stream inside the insert record of its later-revealed endpoint, and is
dropped if the other endpoint has already been deleted by then.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import BatchUpdate, EdgeList

FRACTION_TOLERANCE = 1e-9


@dataclass
class StreamSpec:
    batch_size: int
    seed: int
    insert_fraction: float = 0.90
    gt_fraction: float = 0.01
    delete_fraction: float = 0.09
    initial_gt_count: int = 2

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        total = self.insert_fraction + self.gt_fraction + self.delete_fraction
        if abs(total - 1.0) > FRACTION_TOLERANCE:
            raise ValidationError(f"fractions sum to {total}, expected 1.0")
        if min(self.insert_fraction, self.gt_fraction, self.delete_fraction) < 0:
            raise ValidationError("fractions must be nonnegative")
        if self.initial_gt_count < 0:
            raise ValidationError("initial_gt_count must be >= 0")


@dataclass
class StreamResult:
    batches: list[BatchUpdate]
    source_of: np.ndarray  # stream id -> source vertex id
    substitutions: dict

    @property
    def stream_of(self) -> dict:
        return {int(s): i for i, s in enumerate(self.source_of)}


def make_stream(
    n: int,
    edges: EdgeList,
    gt_ids: np.ndarray,
    gt_classes: np.ndarray,
    spec: StreamSpec,
) -> StreamResult:
    """Deterministic batch schedule revealing all n vertices of the source graph."""
    spec.validate()
    gt_ids = np.asarray(gt_ids, dtype=np.int64)
    gt_classes = np.asarray(gt_classes, dtype=np.int8)
    if len(gt_ids) != len(gt_classes):
        raise ValidationError("gt_ids and gt_classes length mismatch")
    if spec.initial_gt_count > len(gt_ids):
        raise ValidationError(
            f"initial_gt_count {spec.initial_gt_count} exceeds the "
            f"{len(gt_ids)} ground-truth vertices available"
        )
    rng = np.random.default_rng(spec.seed)
    cls_of = np.full(n, -1, dtype=np.int8)
    cls_of[gt_ids] = gt_classes

    gt_queue = rng.permutation(gt_ids)
    # Interleave classes so the initial seed set covers both when it can.
    g0 = gt_queue[cls_of[gt_queue] == 0]
    g1 = gt_queue[cls_of[gt_queue] == 1]
    inter = np.empty(len(gt_queue), dtype=np.int64)
    k = min(len(g0), len(g1))
    inter[0 : 2 * k : 2] = g0[:k]
    inter[1 : 2 * k : 2] = g1[:k]
    inter[2 * k :] = np.concatenate([g0[k:], g1[k:]])
    gt_queue = inter
    mask = np.ones(n, dtype=bool)
    mask[gt_ids] = False
    unl_queue = rng.permutation(np.flatnonzero(mask))

    n_gt_sched = int(round(spec.gt_fraction * spec.batch_size))
    n_del_sched = int(round(spec.delete_fraction * spec.batch_size))
    n_unl_sched = spec.batch_size - n_gt_sched - n_del_sched
    if n_unl_sched < 0:
        raise ValidationError("batch_size too small for the requested fractions")

    subs = {"gt_for_unlabeled": 0, "unlabeled_for_gt": 0, "deletes_short": 0}
    reveal_order: list[np.ndarray] = []
    batch_bounds = [0]
    batch_deletes: list[np.ndarray] = []
    gi, ui = spec.initial_gt_count, 0
    reveal_order.append(gt_queue[:gi])
    batch_bounds.append(gi)
    batch_deletes.append(np.empty(0, dtype=np.int64))

    revealed = gi
    alive = np.zeros(n, dtype=bool)  # over stream ids
    alive[:gi] = True
    while gi < len(gt_queue) or ui < len(unl_queue):
        want_gt = min(n_gt_sched, len(gt_queue) - gi)
        want_unl = min(n_unl_sched, len(unl_queue) - ui)
        short_gt = n_gt_sched - want_gt
        short_unl = n_unl_sched - want_unl
        extra_unl = min(short_gt, len(unl_queue) - ui - want_unl)
        extra_gt = min(short_unl, len(gt_queue) - gi - want_gt)
        subs["unlabeled_for_gt"] += extra_unl
        subs["gt_for_unlabeled"] += extra_gt
        take_gt = want_gt + extra_gt
        take_unl = want_unl + extra_unl
        if take_gt + take_unl == 0:
            break  # insert-free schedule cannot drain the pools

        alive_ids = np.flatnonzero(alive[:revealed])
        n_del = min(n_del_sched, max(0, len(alive_ids) - 1))
        subs["deletes_short"] += n_del_sched - n_del
        if n_del > 0:
            dels = np.sort(rng.choice(alive_ids, size=n_del, replace=False))
        else:
            dels = np.empty(0, dtype=np.int64)
        alive[dels] = False

        ins = np.concatenate([unl_queue[ui : ui + take_unl], gt_queue[gi : gi + take_gt]])
        ui += take_unl
        gi += take_gt
        reveal_order.append(ins)
        alive[revealed : revealed + len(ins)] = True
        revealed += len(ins)
        batch_bounds.append(revealed)
        batch_deletes.append(dels)

    source_of = np.concatenate(reveal_order) if reveal_order else np.empty(0, dtype=np.int64)
    stream_of = np.full(n, -1, dtype=np.int64)
    stream_of[source_of] = np.arange(revealed)
    bounds = np.asarray(batch_bounds, dtype=np.int64)
    num_batches = len(batch_deletes)

    # Batch each stream id was revealed in, and the batch it died in (if any).
    reveal_batch = np.searchsorted(bounds[1:], np.arange(revealed), side="right")
    death_batch = np.full(revealed, num_batches + 1, dtype=np.int64)
    for t, dels in enumerate(batch_deletes):
        death_batch[dels] = t

    # Assign every source edge to the batch of its later-revealed endpoint.
    sa = stream_of[edges.u]
    sb = stream_of[edges.v]
    owner = np.maximum(sa, sb)
    other = np.minimum(sa, sb)
    keep = death_batch[other] > reveal_batch[owner]
    owner, other, ew = owner[keep], other[keep], edges.w[keep]
    e_order = np.lexsort((other, owner))
    owner, other, ew = owner[e_order], other[e_order], ew[e_order]
    e_batch = reveal_batch[owner]
    e_bounds = np.searchsorted(e_batch, np.arange(num_batches + 1))

    batches = []
    for t in range(num_batches):
        lo, hi = bounds[t], bounds[t + 1]
        ids = np.arange(lo, hi, dtype=np.int64)
        gt = cls_of[source_of[lo:hi]]
        el, eh = e_bounds[t], e_bounds[t + 1]
        batches.append(
            BatchUpdate(
                t=t,
                insert_ids=ids,
                insert_gt=gt,
                edge_owner=owner[el:eh] - lo,
                edge_other=other[el:eh],
                edge_w=ew[el:eh],
                deletes=batch_deletes[t],
            )
        )
    return StreamResult(batches=batches, source_of=source_of, substitutions=subs)


def single_batch_stream(
    n: int,
    edges: EdgeList,
    gt_ids: np.ndarray,
    gt_classes: np.ndarray,
) -> list[BatchUpdate]:
    """The whole graph as one batch (ids kept as-is), for from-scratch runs."""
    gt = np.full(n, -1, dtype=np.int8)
    gt[np.asarray(gt_ids, dtype=np.int64)] = np.asarray(gt_classes, dtype=np.int8)
    owner = np.maximum(edges.u, edges.v)
    other = np.minimum(edges.u, edges.v)
    order = np.lexsort((other, owner))
    return [
        BatchUpdate(
            t=0,
            insert_ids=np.arange(n, dtype=np.int64),
            insert_gt=gt,
            edge_owner=owner[order],
            edge_other=other[order],
            edge_w=edges.w[order],
            deletes=np.empty(0, dtype=np.int64),
        )
    ]
