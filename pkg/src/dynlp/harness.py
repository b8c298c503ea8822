"""Method-vs-method experiment runner and the reported metrics:
iteration counts, update counts, wall time, speedup ratios, binary
agreement against a reference, and Dirichlet energy."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import (
    DENSE_SOLVE_CAP,
    itlp_batch_solve,
    oracle_batch_solve,
    stlp_batch_solve,
)
from .engine import EngineConfig, IterationReport, apply_batch
from .errors import ValidationError
from .graph import BatchUpdate, DynamicGraph
from .labels import UNLABELED, LabelState, binary_label

METHODS = ("dynlp", "itlp", "stlp", "oracle")
DESK_SCALE_METHODS = ("stlp", "oracle")


def dirichlet_energy(graph: DynamicGraph, labels) -> float:
    """Half the weighted sum of squared label differences, each edge once."""
    f = labels.f if isinstance(labels, LabelState) else np.asarray(labels, dtype=np.float64)
    edges = graph.live_edges()
    if len(edges) == 0:
        return 0.0
    diff = f[edges.u] - f[edges.v]
    return 0.5 * float((edges.w * diff * diff).sum())


@dataclass
class AccuracyReport:
    reference_method: str
    agreement: float
    compared_count: int
    margin_excluded_count: int

    def to_json_dict(self) -> dict:
        return asdict(self)


def binary_accuracy(
    candidate: tuple[np.ndarray, np.ndarray],
    reference: tuple[np.ndarray, np.ndarray],
    epsilon_margin: float = 0.0,
    reference_method: str = "reference",
) -> AccuracyReport:
    """Agreement of 0.5-thresholded labels (ties to class 1) over a shared vertex set.

    candidate and reference are (vertex ids, fractional labels) pairs
    covering the same vertices.  Reference values within epsilon_margin
    of 0.5 are excluded from the comparison and counted separately.
    """
    cand_ids, cand_vals = candidate
    ref_ids, ref_vals = reference
    cand_order = np.argsort(cand_ids)
    ref_order = np.argsort(ref_ids)
    cand_ids = np.asarray(cand_ids)[cand_order]
    ref_ids = np.asarray(ref_ids)[ref_order]
    if not np.array_equal(cand_ids, ref_ids):
        diff = len(np.setxor1d(cand_ids, ref_ids))
        raise ValidationError(
            f"label vectors cover different vertex sets (symmetric difference {diff})"
        )
    cand_vals = np.asarray(cand_vals, dtype=np.float64)[cand_order]
    ref_vals = np.asarray(ref_vals, dtype=np.float64)[ref_order]
    if epsilon_margin > 0:
        margin = np.abs(ref_vals - 0.5) < epsilon_margin
    else:
        margin = np.zeros(len(ref_vals), dtype=bool)
    keep = ~margin
    cand_bin = cand_vals[keep] >= 0.5
    ref_bin = ref_vals[keep] >= 0.5
    compared = int(keep.sum())
    matches = int((cand_bin == ref_bin).sum())
    agreement = matches / compared if compared else 1.0
    return AccuracyReport(
        reference_method=reference_method,
        agreement=agreement,
        compared_count=compared,
        margin_excluded_count=int(margin.sum()),
    )


@dataclass
class RunReport:
    method: str
    per_batch: list[IterationReport] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)

    @property
    def totals(self) -> dict:
        return {
            "iterations": sum(r.iterations for r in self.per_batch),
            "updates": sum(r.updates for r in self.per_batch),
            "wall_time_ms": sum(r.wall_time_ms for r in self.per_batch),
            "warnings": sum(r.warnings for r in self.per_batch),
            "converged": all(r.converged for r in self.per_batch),
        }

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "per_batch": [r.to_json_dict() for r in self.per_batch],
            "totals": self.totals,
            "config_echo": self.config_echo,
        }


def config_echo(cfg: EngineConfig, **extra) -> dict:
    echo = asdict(cfg)
    echo.update(extra)
    return json.loads(json.dumps(echo))


def run_method(
    method: str,
    batches: Sequence[BatchUpdate],
    cfg: EngineConfig,
    dense_cap: int = DENSE_SOLVE_CAP,
    on_batch=None,
) -> tuple[DynamicGraph, LabelState, RunReport]:
    """Replay a batch sequence from an empty graph under one method.

    on_batch(graph, labels, report), when given, fires after each batch.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    graph = DynamicGraph()
    labels = LabelState()
    report = RunReport(method=method, config_echo=config_echo(cfg, method=method))
    for batch in batches:
        if method == "dynlp":
            _, rep = apply_batch(graph, labels, batch, cfg)
        elif method == "itlp":
            _, rep = itlp_batch_solve(graph, labels, batch, cfg)
        elif method == "stlp":
            _, rep = stlp_batch_solve(graph, labels, batch, cfg, dense_cap)
        else:
            _, rep = oracle_batch_solve(graph, labels, batch, cfg, dense_cap)
        rep.t = batch.t
        report.per_batch.append(rep)
        if on_batch is not None:
            on_batch(graph, labels, rep)
    return graph, labels, report


def unlabeled_view(graph: DynamicGraph, labels: LabelState) -> tuple[np.ndarray, np.ndarray]:
    ids = labels.unlabeled_ids(graph)
    return ids, labels.f[ids]


@dataclass
class ComparisonResult:
    reports: dict
    accuracy: dict
    speedups: dict
    energy: dict

    def to_json_dict(self) -> dict:
        return {
            "reports": {m: r.to_json_dict() for m, r in self.reports.items()},
            "accuracy": {m: a.to_json_dict() for m, a in self.accuracy.items()},
            "speedups": self.speedups,
            "energy": self.energy,
        }

    def per_batch_csv(self) -> str:
        lines = ["method,batch,iterations,updates,wall_time_ms"]
        for method, report in self.reports.items():
            for rep in report.per_batch:
                lines.append(
                    f"{method},{rep.t},{rep.iterations},{rep.updates},{rep.wall_time_ms!r}"
                )
        return "\n".join(lines) + "\n"


def compare_methods(
    batches: Sequence[BatchUpdate],
    methods: Sequence[str],
    cfg: EngineConfig,
    reference: str = "stlp",
    epsilon_margin: float = 0.0,
    dense_cap: int = DENSE_SOLVE_CAP,
) -> ComparisonResult:
    """Run each method over the identical stream and cross-compare.

    Methods run sequentially, never concurrently, so timings stay
    honest.  Accuracy against the reference is computed on the final
    unlabeled label vectors when the reference method is among those
    run.  Desk-scale methods refuse streams whose final unlabeled count
    exceeds the dense-solve cap.
    """
    methods = list(dict.fromkeys(methods))
    if not methods:
        raise ValidationError("methods must be nonempty")
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}; valid: {', '.join(METHODS)}")
    total_inserts = sum(len(b.insert_ids) for b in batches)
    for m in methods:
        if m in DESK_SCALE_METHODS and total_inserts > dense_cap:
            raise ValidationError(
                f"method {m!r} needs a dense solve; stream has up to "
                f"{total_inserts} vertices, cap is {dense_cap}"
            )
    reports: dict = {}
    finals: dict = {}
    energy: dict = {}
    for m in methods:
        graph, labels, report = run_method(m, batches, cfg, dense_cap)
        reports[m] = report
        finals[m] = unlabeled_view(graph, labels)
        energy[m] = dirichlet_energy(graph, labels)
    speedups = {}
    for a in methods:
        for b in methods:
            if a == b:
                continue
            tb = reports[b].totals["wall_time_ms"]
            if tb > 0:
                speedups[f"{a}/{b}"] = reports[a].totals["wall_time_ms"] / tb
    accuracy = {}
    if reference in finals:
        for m in methods:
            if m == reference:
                continue
            accuracy[m] = binary_accuracy(
                finals[m], finals[reference], epsilon_margin, reference_method=reference
            )
    return ComparisonResult(reports=reports, accuracy=accuracy, speedups=speedups, energy=energy)
