"""Fractional label state: per-vertex value in [0,1] plus the fixed ground truth."""

from __future__ import annotations

import numpy as np

from .errors import FileFormatError, ValidationError
from .graph import DynamicGraph

UNLABELED = -1


class LabelState:
    """Per-vertex fractional label f and ground-truth class (-1/0/1).

    Ground-truth vertices are pinned: f is 0.0 for class 0 and 1.0 for
    class 1 and never changes while the vertex lives.
    """

    def __init__(self, n: int = 0) -> None:
        self.f = np.full(n, 0.5, dtype=np.float64)
        self.gt = np.full(n, UNLABELED, dtype=np.int8)

    @property
    def n(self) -> int:
        return self.f.shape[0]

    def ensure_capacity(self, n: int) -> None:
        if n <= self.n:
            return
        f = np.full(n, 0.5, dtype=np.float64)
        gt = np.full(n, UNLABELED, dtype=np.int8)
        f[: self.n] = self.f
        gt[: self.n] = self.gt
        self.f, self.gt = f, gt

    def set_ground_truth(self, ids: np.ndarray, classes: np.ndarray) -> None:
        ids = np.asarray(ids, dtype=np.int64)
        classes = np.asarray(classes)
        if len(ids) == 0:
            return
        if not np.isin(classes, (0, 1)).all():
            raise ValidationError("ground-truth class must be 0 or 1")
        conflict = self.gt[ids] >= 0
        if conflict.any() and (self.gt[ids][conflict] != classes[conflict]).any():
            bad = int(ids[conflict][self.gt[ids][conflict] != classes[conflict]][0])
            raise ValidationError(f"vertex {bad} already has a different ground-truth class")
        self.gt[ids] = classes
        self.f[ids] = classes.astype(np.float64)

    def class_ids(self, graph: DynamicGraph, cls: int) -> np.ndarray:
        """Alive vertices with the given ground-truth class."""
        mask = graph.alive & (self.gt[: graph.num_slots] == cls)
        return np.flatnonzero(mask).astype(np.int64)

    def unlabeled_ids(self, graph: DynamicGraph) -> np.ndarray:
        mask = graph.alive & (self.gt[: graph.num_slots] == UNLABELED)
        return np.flatnonzero(mask).astype(np.int64)

    def copy(self) -> "LabelState":
        out = LabelState(self.n)
        out.f[:] = self.f
        out.gt[:] = self.gt
        return out


def binary_label(value: float) -> int:
    """Class cutoff at 0.5; ties go to class 1."""
    return 1 if value >= 0.5 else 0


def labels_to_csv(graph: DynamicGraph, labels: LabelState) -> str:
    """CSV dump over alive vertices: vertex,fractional_label,binary_label,is_ground_truth."""
    lines = ["vertex,fractional_label,binary_label,is_ground_truth"]
    for u in graph.alive_ids():
        f = float(labels.f[u])
        lines.append(f"{u},{f!r},{binary_label(f)},{int(labels.gt[u] >= 0)}")
    return "\n".join(lines) + "\n"


def ground_truth_to_csv(ids: np.ndarray, classes: np.ndarray) -> str:
    lines = ["vertex,class"]
    for i, c in zip(ids, classes):
        lines.append(f"{int(i)},{int(c)}")
    return "\n".join(lines) + "\n"


def read_ground_truth_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    ids, classes = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("vertex"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FileFormatError(f"line {lineno}: expected 'vertex,class'")
        ids.append(int(parts[0]))
        classes.append(int(parts[1]))
    return np.asarray(ids, dtype=np.int64), np.asarray(classes, dtype=np.int8)
