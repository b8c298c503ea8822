import json

import numpy as np
import pytest

from dynlp.baselines import harmonic_solve
from dynlp.builder import SyntheticSpec, erdos_renyi
from dynlp.engine import EngineConfig
from dynlp.errors import ValidationError
from dynlp.graph import BatchUpdate
from dynlp.harness import (
    binary_accuracy,
    compare_methods,
    dirichlet_energy,
    run_method,
    unlabeled_view,
)
from dynlp.stream import StreamSpec, make_stream

from helpers import build_graph, graph_as_batch, random_connected_instance


def ids_vals(ids, vals):
    return np.asarray(ids, dtype=np.int64), np.asarray(vals, dtype=np.float64)


class TestBinaryAccuracy:
    def test_identical_vectors(self):
        a = ids_vals([1, 2, 3], [0.1, 0.9, 0.4])
        rep = binary_accuracy(a, a)
        assert rep.agreement == 1.0
        assert rep.compared_count == 3

    def test_flipped_vectors(self):
        ids = [4, 5, 6]
        ref = np.array([0.2, 0.8, 0.3])
        rep = binary_accuracy(ids_vals(ids, 1 - ref), ids_vals(ids, ref))
        assert rep.agreement == 0.0

    def test_ties_go_to_class_one(self):
        rep = binary_accuracy(ids_vals([0], [0.5]), ids_vals([0], [0.99]))
        assert rep.agreement == 1.0

    def test_mismatched_sets_error_reports_difference(self):
        with pytest.raises(ValidationError, match="2"):
            binary_accuracy(ids_vals([1, 2], [0, 0]), ids_vals([1, 3], [0, 0]))

    def test_margin_exclusion(self):
        ids = [1, 2, 3, 4]
        ref = [0.5005, 0.9, 0.1, 0.4999]
        cand = [0.0, 1.0, 0.0, 1.0]
        rep = binary_accuracy(ids_vals(ids, cand), ids_vals(ids, ref), epsilon_margin=1e-3)
        assert rep.margin_excluded_count == 2
        assert rep.compared_count == 2
        assert rep.agreement == 1.0


class TestDirichletEnergy:
    def test_constant_labels_zero(self):
        graph, labels = build_graph(3, [(0, 1, 2.0), (1, 2, 3.0)])
        labels.f[:] = 0.7
        assert dirichlet_energy(graph, labels) == 0.0

    def test_single_unit_edge(self):
        graph, labels = build_graph(2, [(0, 1, 1.0)], gt={0: 0, 1: 1})
        assert dirichlet_energy(graph, labels) == 0.5

    def test_path_minimum_at_harmonic_solution(self):
        graph, labels = build_graph(
            4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], gt={0: 0, 3: 1}
        )
        labels.f[1], labels.f[2] = 1 / 3, 2 / 3
        best = dirichlet_energy(graph, labels)
        assert best == pytest.approx(1 / 6, abs=1e-12)
        # grid-search oracle over the two free coordinates
        grid = np.linspace(0, 1, 41)
        for a in grid:
            for b in grid:
                labels.f[1], labels.f[2] = a, b
                assert dirichlet_energy(graph, labels) >= best - 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_oracle_energy_beats_random_perturbations(self, seed):
        rng = np.random.default_rng(seed)
        pairs, gt = random_connected_instance(rng, 50, 5)
        graph, labels = build_graph(50, pairs, gt)
        labels.f[:] = harmonic_solve(graph, labels)
        base = dirichlet_energy(graph, labels)
        unl = labels.unlabeled_ids(graph)
        for _ in range(100):
            bumped = labels.copy()
            bumped.f[unl] = np.clip(
                bumped.f[unl] + rng.normal(0, 0.05, len(unl)), 0, 1
            )
            assert dirichlet_energy(graph, bumped) >= base - 1e-12


def small_stream(seed=0, n=300, lf=0.05, batch=40, deletes=True):
    data = erdos_renyi(SyntheticSpec(n=n, avg_degree=5, seed=seed, labeled_fraction=lf))
    if deletes:
        spec = StreamSpec(batch_size=batch, seed=seed + 1, initial_gt_count=4)
    else:
        spec = StreamSpec(
            batch_size=batch, seed=seed + 1, initial_gt_count=4,
            insert_fraction=0.98, gt_fraction=0.02, delete_fraction=0.0,
        )
    return make_stream(
        data.n, data.edges, data.gt_ids, data.gt_classes, spec
    ).batches


class TestCompareMethods:
    def test_empty_stream_single_method(self):
        result = compare_methods([], ["dynlp"], EngineConfig())
        assert result.reports["dynlp"].per_batch == []
        assert result.accuracy == {}

    def test_unknown_method_listed(self):
        with pytest.raises(ValidationError, match="dynlp, itlp, stlp, oracle"):
            compare_methods([], ["bogus"], EngineConfig())

    def test_dense_cap_refusal(self):
        batches = small_stream()
        with pytest.raises(ValidationError, match="cap"):
            compare_methods(batches, ["oracle"], EngineConfig(), dense_cap=10)

    def test_dynlp_updates_below_itlp(self):
        batches = small_stream(seed=3)
        result = compare_methods(batches, ["dynlp", "itlp"], EngineConfig(delta=1e-4))
        assert (
            result.reports["dynlp"].totals["updates"]
            < result.reports["itlp"].totals["updates"]
        )
        assert "itlp/dynlp" in result.speedups

    def test_stlp_agrees_with_oracle(self):
        batches = small_stream(seed=5, n=200, deletes=False)
        result = compare_methods(
            batches, ["stlp", "oracle"], EngineConfig(), reference="oracle"
        )
        assert result.accuracy["stlp"].agreement == 1.0
        _, labels_s, _ = run_method("stlp", batches, EngineConfig())
        _, labels_o, _ = run_method("oracle", batches, EngineConfig())
        np.testing.assert_allclose(labels_s.f, labels_o.f, atol=1e-9)

    def test_accuracy_skipped_without_reference(self):
        batches = small_stream(seed=6, n=200)
        result = compare_methods(batches, ["dynlp", "itlp"], EngineConfig(), reference="stlp")
        assert result.accuracy == {}


class TestReportIntegrity:
    def test_totals_are_sums_and_echo_round_trips(self):
        batches = small_stream(seed=7, n=200)
        _, _, report = run_method("dynlp", batches, EngineConfig(delta=1e-3))
        totals = report.totals
        assert totals["iterations"] == sum(r.iterations for r in report.per_batch)
        assert totals["updates"] == sum(r.updates for r in report.per_batch)
        blob = json.dumps(report.to_json_dict())
        again = json.loads(blob)
        assert again["config_echo"] == report.config_echo
        assert again["totals"]["iterations"] == totals["iterations"]

    def test_timing_correlates_with_update_counts(self):
        from scipy.stats import spearmanr

        batches = small_stream(seed=8, n=2500, lf=0.02, batch=100)
        _, _, report = run_method("dynlp", batches, EngineConfig(delta=1e-6))
        assert len(report.per_batch) >= 20
        updates = [r.updates for r in report.per_batch]
        times = [r.wall_time_ms for r in report.per_batch]
        rho = spearmanr(updates, times).statistic
        assert rho > 0
