"""Dynamic weighted undirected sparse graph with batched insert/delete.

Vertices carry dense integer ids assigned contiguously per batch and
never reused.  Deletion tombstones the vertex; incident edges are
masked out logically (an edge is live iff both endpoints are alive) and
physically dropped when enough of the graph has died since the last
compaction.  Adjacency is exposed as a lazily rebuilt CSR snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import FileFormatError, ValidationError
from .kernels import row_positions

COMPACT_DEAD_FRACTION = 0.25


@dataclass
class EdgeList:
    """Columnar list of undirected weighted edges."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int, float]]) -> "EdgeList":
        rows = list(pairs)
        if not rows:
            return cls.empty()
        u, v, w = zip(*rows)
        return cls(
            np.asarray(u, dtype=np.int64),
            np.asarray(v, dtype=np.int64),
            np.asarray(w, dtype=np.float64),
        )

    @classmethod
    def empty(cls) -> "EdgeList":
        return cls(
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
        )

    def __len__(self) -> int:
        return self.u.shape[0]

    def __iter__(self) -> Iterator[tuple[int, int, float]]:
        for i in range(len(self)):
            yield int(self.u[i]), int(self.v[i]), float(self.w[i])

    def canonical(self) -> "EdgeList":
        """Each edge once with u < v, sorted by (u, v)."""
        lo = np.minimum(self.u, self.v)
        hi = np.maximum(self.u, self.v)
        order = np.lexsort((hi, lo))
        return EdgeList(lo[order], hi[order], self.w[order])


@dataclass
class BatchUpdate:
    """One timestep of changes: inserted vertices with their edges, plus deletions.

    Insert edges are stored flat: edge_owner indexes into insert_ids (the
    record the edge was listed under), edge_other is the other endpoint.
    Ground truth is -1 (unlabeled), 0, or 1.
    """

    t: int
    insert_ids: np.ndarray
    insert_gt: np.ndarray
    edge_owner: np.ndarray
    edge_other: np.ndarray
    edge_w: np.ndarray
    deletes: np.ndarray

    @classmethod
    def from_records(
        cls,
        inserts: Sequence[tuple[int, Sequence[tuple[int, int, float]], Optional[int]]] = (),
        deletes: Sequence[int] = (),
        t: int = 0,
    ) -> "BatchUpdate":
        """Build from (vertex_id, edges, ground_truth) records.

        Each edge is (a, b, w); the endpoint equal to the record's vertex
        id is the owner side.
        """
        ids, gts = [], []
        e_owner, e_other, e_w = [], [], []
        for idx, (vid, edges, gt) in enumerate(inserts):
            ids.append(vid)
            gts.append(-1 if gt is None else int(gt))
            for a, b, w in edges:
                if a == vid:
                    other = b
                elif b == vid:
                    other = a
                else:
                    raise ValidationError(
                        f"edge ({a},{b}) in insert record for vertex {vid} does not touch it"
                    )
                e_owner.append(idx)
                e_other.append(other)
                e_w.append(w)
        return cls(
            t=t,
            insert_ids=np.asarray(ids, dtype=np.int64),
            insert_gt=np.asarray(gts, dtype=np.int8),
            edge_owner=np.asarray(e_owner, dtype=np.int64),
            edge_other=np.asarray(e_other, dtype=np.int64),
            edge_w=np.asarray(e_w, dtype=np.float64),
            deletes=np.asarray(list(deletes), dtype=np.int64),
        )

    @property
    def is_empty(self) -> bool:
        return len(self.insert_ids) == 0 and len(self.deletes) == 0

    def insert_edges(self) -> EdgeList:
        """Flat (owner_id, other, w) view of this batch's edges."""
        if len(self.edge_owner) == 0:
            return EdgeList.empty()
        return EdgeList(
            self.insert_ids[self.edge_owner], self.edge_other.copy(), self.edge_w.copy()
        )

    def to_json_obj(self) -> dict:
        order = np.argsort(self.edge_owner, kind="stable")
        bounds = np.searchsorted(self.edge_owner[order], np.arange(len(self.insert_ids) + 1))
        inserts = []
        for i, vid in enumerate(self.insert_ids):
            sel = order[bounds[i] : bounds[i + 1]]
            gt = int(self.insert_gt[i])
            inserts.append(
                {
                    "id": int(vid),
                    "gt": None if gt < 0 else gt,
                    "edges": [
                        [int(v), float(w)]
                        for v, w in zip(self.edge_other[sel], self.edge_w[sel])
                    ],
                }
            )
        return {"t": int(self.t), "inserts": inserts, "deletes": [int(d) for d in self.deletes]}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BatchUpdate":
        try:
            records = [
                (rec["id"], [(rec["id"], v, w) for v, w in rec["edges"]], rec.get("gt"))
                for rec in obj["inserts"]
            ]
            return cls.from_records(records, obj.get("deletes", ()), t=obj["t"])
        except (KeyError, TypeError) as exc:
            raise FileFormatError(f"malformed batch record: {exc}") from exc


@dataclass
class CsrView:
    """Immutable adjacency snapshot: both directions of every live edge."""

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray


class DynamicGraph:
    """Weighted undirected graph under batched vertex insertion/deletion."""

    def __init__(self) -> None:
        self._chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self.alive = np.zeros(0, dtype=bool)
        self.num_alive = 0
        self._csr: CsrView | None = None
        self._live_edges: EdgeList | None = None
        self._dead_at_last_compact = 0

    # -- basic accessors -----------------------------------------------------

    @property
    def num_slots(self) -> int:
        """Total ids ever allocated (dense id space, including dead)."""
        return self.alive.shape[0]

    @property
    def edge_count(self) -> int:
        return len(self.live_edges())

    @property
    def total_weight_sum(self) -> float:
        return float(self.live_edges().w.sum())

    def is_alive(self, u: int) -> bool:
        return 0 <= u < self.num_slots and bool(self.alive[u])

    def live_edges(self) -> EdgeList:
        """Every live undirected edge exactly once."""
        if self._live_edges is None:
            if self._chunks:
                u = np.concatenate([c[0] for c in self._chunks])
                v = np.concatenate([c[1] for c in self._chunks])
                w = np.concatenate([c[2] for c in self._chunks])
                keep = self.alive[u] & self.alive[v]
                self._live_edges = EdgeList(u[keep], v[keep], w[keep])
            else:
                self._live_edges = EdgeList.empty()
        return self._live_edges

    def csr(self) -> CsrView:
        if self._csr is None:
            edges = self.live_edges()
            n = self.num_slots
            both_u = np.concatenate([edges.u, edges.v])
            both_v = np.concatenate([edges.v, edges.u])
            both_w = np.concatenate([edges.w, edges.w])
            counts = np.bincount(both_u, minlength=n)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            order = np.argsort(both_u, kind="stable")
            degrees = np.bincount(both_u, weights=both_w, minlength=n)
            self._csr = CsrView(indptr, both_v[order], both_w[order], degrees)
        return self._csr

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        self._check_alive(u)
        csr = self.csr()
        lo, hi = csr.indptr[u], csr.indptr[u + 1]
        return csr.indices[lo:hi], csr.weights[lo:hi]

    def weighted_degree(self, u: int) -> float:
        """Sum of incident edge weights; 0 for isolated vertices."""
        self._check_alive(u)
        return float(self.csr().degrees[u])

    def alive_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive).astype(np.int64)

    # -- mutation ------------------------------------------------------------

    def allocate_ids(self, k: int) -> np.ndarray:
        """Ids the next insert batch must use (contiguous, never reused)."""
        n = self.num_slots
        return np.arange(n, n + k, dtype=np.int64)

    def validate_deletes(self, deletes: np.ndarray) -> None:
        if len(deletes) == 0:
            return
        uniq = np.unique(deletes)
        if len(uniq) != len(deletes):
            raise ValidationError("duplicate vertex id in deletes")
        bad = uniq[(uniq < 0) | (uniq >= self.num_slots)]
        if len(bad):
            raise ValidationError(f"unknown vertex id {int(bad[0])} in deletes")
        dead = uniq[~self.alive[uniq]]
        if len(dead):
            raise ValidationError(f"vertex {int(dead[0])} is already deleted")

    def validate_inserts(self, batch: BatchUpdate, pending_deletes: np.ndarray | None = None) -> None:
        ids = batch.insert_ids
        if len(ids) == 0:
            if len(batch.edge_other):
                raise ValidationError("batch has edges but no inserted vertices")
            return
        expected = self.allocate_ids(len(ids))
        if len(np.unique(ids)) != len(ids):
            raise ValidationError("duplicate fresh id in inserts")
        if not np.array_equal(np.sort(ids), expected):
            raise ValidationError(
                f"insert ids must be the contiguous block {int(expected[0])}..{int(expected[-1])}"
            )
        if pending_deletes is not None and len(pending_deletes):
            if np.isin(ids, pending_deletes).any():
                raise ValidationError("a vertex id appears in both inserts and deletes")
        if len(batch.edge_other):
            if (batch.edge_w < 0).any():
                bad = int(batch.edge_other[batch.edge_w < 0][0])
                raise ValidationError(f"negative weight on edge to vertex {bad}")
            owner_ids = batch.insert_ids[batch.edge_owner]
            if (owner_ids == batch.edge_other).any():
                raise ValidationError("self-loop in insert edges")
            other = batch.edge_other
            ext = other[~np.isin(other, ids)]
            if len(ext):
                bad = ext[(ext < 0) | (ext >= self.num_slots)]
                if len(bad):
                    raise ValidationError(f"edge to unknown vertex {int(bad[0])}")
                dead = ext[~self.alive[ext]]
                if len(dead):
                    raise ValidationError(f"edge to a dead vertex {int(dead[0])}")
                if pending_deletes is not None and len(pending_deletes):
                    hit = np.isin(ext, pending_deletes)
                    if hit.any():
                        raise ValidationError(
                            f"edge to vertex {int(ext[hit][0])} deleted in the same batch"
                        )

    def validate_batch(self, batch: BatchUpdate) -> None:
        """Check a whole batch against the current state before mutating (atomicity)."""
        self.validate_deletes(batch.deletes)
        self.validate_inserts(batch, pending_deletes=batch.deletes)

    def apply_deletes(self, deletes) -> np.ndarray:
        """Tombstone vertices and drop their incident edges; returns affected survivors."""
        deletes = np.asarray(deletes, dtype=np.int64)
        self.validate_deletes(deletes)
        if len(deletes) == 0:
            return np.empty(0, dtype=np.int64)
        csr = self.csr()
        nbrs = csr.indices[row_positions(csr.indptr, deletes)]
        self.alive[deletes] = False
        self.num_alive -= len(deletes)
        self._invalidate()
        if len(nbrs):
            nbrs = np.unique(nbrs)
            nbrs = nbrs[self.alive[nbrs]]
        self._maybe_compact()
        return nbrs.astype(np.int64)

    def apply_inserts(self, batch: BatchUpdate) -> np.ndarray:
        """Add the batch's vertices and symmetric edges; returns inserted ∪ prior neighbors."""
        self.validate_inserts(batch)
        ids = batch.insert_ids
        if len(ids) == 0:
            return np.empty(0, dtype=np.int64)
        grown = np.zeros(self.num_slots + len(ids), dtype=bool)
        grown[: self.num_slots] = self.alive
        grown[ids] = True
        self.alive = grown
        self.num_alive += len(ids)
        prior = np.empty(0, dtype=np.int64)
        if len(batch.edge_other):
            owner_ids = batch.insert_ids[batch.edge_owner]
            other = batch.edge_other
            # Merge parallel edges by weight summation, drop zero weights.
            lo = np.minimum(owner_ids, other)
            hi = np.maximum(owner_ids, other)
            key = lo * np.int64(self.num_slots) + hi
            uniq, first, inv = np.unique(key, return_index=True, return_inverse=True)
            merged_w = np.zeros(len(uniq), dtype=np.float64)
            np.add.at(merged_w, inv, batch.edge_w)
            order = np.argsort(first, kind="stable")
            keep = merged_w[order] > 0.0
            mu = lo[first[order]][keep]
            mv = hi[first[order]][keep]
            mw = merged_w[order][keep]
            if len(mu):
                self._chunks.append((mu, mv, mw))
                self._consolidate_chunks()
            ends = np.concatenate([mu, mv])
            prior = np.unique(ends[~np.isin(ends, ids)])
        self._invalidate()
        return np.union1d(ids, prior).astype(np.int64)

    # -- file format -----------------------------------------------------------

    @classmethod
    def from_edge_list(cls, n: int, edges: EdgeList, merge: bool = True) -> "DynamicGraph":
        """Fresh dense graph over vertices 0..n-1 from an undirected edge list."""
        g = cls()
        if len(edges) and (edges.u.max() >= n or edges.v.max() >= n):
            raise ValidationError("edge endpoint exceeds vertex count")
        g.alive = np.ones(n, dtype=bool)
        g.num_alive = n
        if len(edges):
            if (edges.w < 0).any():
                raise ValidationError("negative edge weight")
            if (edges.u == edges.v).any():
                raise ValidationError("self-loop in edge list")
            u, v, w = edges.u, edges.v, edges.w
            if merge:
                lo = np.minimum(u, v)
                hi = np.maximum(u, v)
                key = lo * np.int64(n) + hi
                uniq, inv = np.unique(key, return_inverse=True)
                mw = np.zeros(len(uniq), dtype=np.float64)
                np.add.at(mw, inv, w)
                keep = mw > 0
                g._chunks.append(((uniq // n)[keep], (uniq % n)[keep], mw[keep]))
            else:
                keep = w > 0
                g._chunks.append((u[keep].copy(), v[keep].copy(), w[keep].copy()))
        return g

    def to_text(self) -> str:
        edges = self.live_edges().canonical()
        lines = [f"{self.num_alive} {len(edges)}"]
        for u, v, w in edges:
            lines.append(f"{u} {v} {w!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DynamicGraph":
        rows = []
        header = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                parts = line.split()
                if len(parts) != 2:
                    raise FileFormatError(f"line {lineno}: expected 'N M' header")
                header = (int(parts[0]), int(parts[1]))
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FileFormatError(f"line {lineno}: expected 'u v w'")
            rows.append((int(parts[0]), int(parts[1]), float(parts[2])))
        if header is None:
            raise FileFormatError("missing 'N M' header line")
        n, m = header
        if len(rows) != m:
            raise FileFormatError(f"header declares {m} edges, found {len(rows)}")
        edges = EdgeList.from_pairs(rows)
        if len(edges) and not (edges.u < edges.v).all():
            raise FileFormatError("edges must be listed with u < v")
        return cls.from_edge_list(n, edges)

    # -- internals ---------------------------------------------------------------

    def _check_alive(self, u: int) -> None:
        if not (0 <= u < self.num_slots):
            raise ValidationError(f"unknown vertex id {u}")
        if not self.alive[u]:
            raise ValidationError(f"vertex {u} is deleted")

    def _invalidate(self) -> None:
        self._csr = None
        self._live_edges = None

    def _maybe_compact(self) -> None:
        if self.num_slots == 0:
            return
        dead = self.num_slots - self.num_alive
        if (dead - self._dead_at_last_compact) / self.num_slots > COMPACT_DEAD_FRACTION:
            edges = self.live_edges()
            self._chunks = [(edges.u, edges.v, edges.w)] if len(edges) else []
            self._dead_at_last_compact = dead

    def _consolidate_chunks(self) -> None:
        if len(self._chunks) > 64:
            u = np.concatenate([c[0] for c in self._chunks])
            v = np.concatenate([c[1] for c in self._chunks])
            w = np.concatenate([c[2] for c in self._chunks])
            self._chunks = [(u, v, w)]


def write_batches_jsonl(batches: Sequence[BatchUpdate]) -> str:
    return "".join(
        json.dumps(b.to_json_obj(), separators=(", ", ": ")) + "\n" for b in batches
    )


def read_batches_jsonl(text: str) -> list[BatchUpdate]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
        out.append(BatchUpdate.from_json_obj(obj))
    return out
