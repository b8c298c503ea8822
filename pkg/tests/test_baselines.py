import numpy as np
import pytest

from dynlp.baselines import (
    build_laplacian_blocks,
    harmonic_solve,
    itlp_batch_solve,
    itlp_solve,
    oracle_batch_solve,
    stlp_batch_solve,
    stlp_reduce,
    stlp_solve,
)
from dynlp.engine import EngineConfig, apply_batch
from dynlp.errors import ValidationError
from dynlp.graph import BatchUpdate, DynamicGraph
from dynlp.labels import LabelState

from helpers import build_graph, graph_as_batch, random_connected_instance


def long_run_iteration_oracle(graph, labels, sweeps=10_000):
    """Plain synchronous averaging, written independently of the kernels."""
    f = labels.f.copy()
    gt = labels.gt
    unl = labels.unlabeled_ids(graph)
    rows = {int(u): graph.neighbors(int(u)) for u in unl}
    for _ in range(sweeps):
        prev = f.copy()
        for u in unl:
            nbrs, w = rows[int(u)]
            total = w.sum()
            if total > 0:
                f[u] = float((w * prev[nbrs]).sum() / total)
    return f


class TestItlpSolve:
    def test_single_vertex_between_two_classes(self):
        graph, labels = build_graph(3, [(1, 0, 1.0), (1, 2, 1.0)], gt={0: 0, 2: 1})
        labels.f[1] = 0.1
        labels, report = itlp_solve(graph, labels, delta=1e-9)
        assert labels.f[1] == 0.5
        assert report.iterations <= 2
        assert report.converged

    def test_path_reaches_thirds(self):
        graph, labels = build_graph(
            4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], gt={0: 0, 3: 1}
        )
        labels, report = itlp_solve(graph, labels, delta=1e-12, max_iterations=100_000)
        assert labels.f[1] == pytest.approx(1 / 3, abs=1e-9)
        assert labels.f[2] == pytest.approx(2 / 3, abs=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_harmonic_solver(self, seed):
        rng = np.random.default_rng(seed)
        pairs, gt = random_connected_instance(rng, 60, 5)
        graph, labels = build_graph(60, pairs, gt)
        labels, report = itlp_solve(graph, labels, delta=1e-9, max_iterations=1_000_000)
        assert report.converged
        oracle = harmonic_solve(graph, labels)
        unl = labels.unlabeled_ids(graph)
        np.testing.assert_allclose(labels.f[unl], oracle[unl], atol=1e-6)

    def test_nonconvergence_flagged(self):
        graph, labels = build_graph(
            4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], gt={0: 0, 3: 1}
        )
        labels, report = itlp_solve(graph, labels, delta=1e-12, max_iterations=2)
        assert not report.converged

    def test_isolated_vertices_pinned_and_skipped(self):
        graph, labels = build_graph(4, [(1, 0, 1.0)], gt={0: 1})
        labels.f[2] = 0.9
        labels, report = itlp_solve(graph, labels, delta=1e-9)
        assert labels.f[2] == 0.5
        assert report.isolated_pinned == 2


class TestHarmonicSolve:
    def test_path(self):
        graph, labels = build_graph(
            4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], gt={0: 0, 3: 1}
        )
        f = harmonic_solve(graph, labels)
        assert f[1] == pytest.approx(1 / 3, abs=1e-12)
        assert f[2] == pytest.approx(2 / 3, abs=1e-12)

    def test_star_weighted_average_of_boundary(self):
        graph, labels = build_graph(
            4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], gt={1: 0, 2: 0, 3: 1}
        )
        f = harmonic_solve(graph, labels)
        assert f[0] == pytest.approx(1 / 3, abs=1e-12)

    def test_matches_long_run_iteration(self):
        rng = np.random.default_rng(50)
        pairs, gt = random_connected_instance(rng, 50, 5)
        graph, labels = build_graph(50, pairs, gt)
        f = harmonic_solve(graph, labels)
        slow = long_run_iteration_oracle(graph, labels)
        unl = labels.unlabeled_ids(graph)
        np.testing.assert_allclose(f[unl], slow[unl], atol=1e-8)

    def test_requires_a_labeled_vertex(self):
        graph, labels = build_graph(3, [(0, 1, 1.0)])
        with pytest.raises(ValidationError):
            harmonic_solve(graph, labels)

    def test_unreachable_pinned_and_reported(self):
        graph, labels = build_graph(
            5, [(0, 1, 1.0), (2, 3, 1.0)], gt={0: 0, 1: 1}
        )
        f, info = harmonic_solve(graph, labels, return_info=True)
        assert f[2] == 0.5 and f[3] == 0.5 and f[4] == 0.5
        assert info["unreachable_pinned"] == 3

    def test_size_cap_enforced(self):
        graph, labels = build_graph(30, [(i, i + 1, 1.0) for i in range(29)], gt={0: 1})
        with pytest.raises(ValidationError, match="cap"):
            harmonic_solve(graph, labels, dense_cap=10)


class TestLaplacianBlocks:
    @pytest.mark.parametrize("seed", range(3))
    def test_row_sums_and_diagonal(self, seed):
        rng = np.random.default_rng(seed)
        pairs, gt = random_connected_instance(rng, 30, 4)
        graph, labels = build_graph(30, pairs, gt)
        blocks = build_laplacian_blocks(graph, labels)
        nl = blocks.num_labeled
        full_rows = np.hstack([blocks.l_ul, blocks.l_uu])
        np.testing.assert_allclose(full_rows.sum(axis=1), 0.0, atol=1e-12)
        unlabeled = blocks.ordering[nl:]
        for i, u in enumerate(unlabeled):
            assert blocks.l_uu[i, i] == pytest.approx(graph.weighted_degree(int(u)))
        # symmetric unlabeled block
        np.testing.assert_allclose(blocks.l_uu, blocks.l_uu.T)


class TestStlp:
    def test_parallel_edge_sums_to_representatives(self):
        graph, labels = build_graph(
            4,
            [(3, 0, 1.0), (3, 1, 1.0), (3, 2, 1.0)],
            gt={0: 0, 1: 0, 2: 1},
        )
        reduced = stlp_reduce(graph, labels)
        pairs = {
            (int(u), int(v)): w for u, v, w in zip(reduced.edges.u, reduced.edges.v, reduced.edges.w)
        }
        local3 = int(reduced.local_of(np.array([3]))[0])
        assert pairs[(local3, reduced.REP0)] == 2.0
        assert pairs[(local3, reduced.REP1)] == 1.0

    def test_vertex_without_labeled_edges_keeps_only_unlabeled(self):
        graph, labels = build_graph(
            4, [(2, 3, 0.7), (2, 0, 1.0), (2, 1, 1.0)], gt={0: 0, 1: 1}
        )
        reduced = stlp_reduce(graph, labels)
        local3 = int(reduced.local_of(np.array([3]))[0])
        touching3 = [
            (int(u), int(v))
            for u, v in zip(reduced.edges.u, reduced.edges.v)
            if local3 in (u, v)
        ]
        assert len(touching3) == 1  # only the edge to vertex 2

    def test_intra_class_edges_dropped(self):
        # A labeled-labeled edge becomes a self-loop under contraction and
        # must not change any unlabeled vertex's solution.
        gt = {0: 0, 1: 0, 2: 1}
        with_edge, labels_a = build_graph(4, [(0, 1, 5.0), (3, 0, 1.0), (3, 2, 1.0)], gt=gt)
        without, labels_b = build_graph(4, [(3, 0, 1.0), (3, 2, 1.0)], gt=gt)
        ra = stlp_reduce(with_edge, labels_a)
        rb = stlp_reduce(without, labels_b)
        assert len(ra.edges) == len(rb.edges)
        stlp_solve(with_edge, labels_a)
        stlp_solve(without, labels_b)
        assert labels_a.f[3] == pytest.approx(labels_b.f[3], abs=1e-12)

    def test_degree_preservation(self):
        rng = np.random.default_rng(4)
        pairs, gt = random_connected_instance(rng, 40, 5)
        graph, labels = build_graph(40, pairs, gt)
        reduced = stlp_reduce(graph, labels)
        deg_local = np.zeros(reduced.n_local)
        np.add.at(deg_local, reduced.edges.u, reduced.edges.w)
        np.add.at(deg_local, reduced.edges.v, reduced.edges.w)
        for u in labels.unlabeled_ids(graph):
            lu = int(reduced.local_of(np.array([int(u)]))[0])
            assert deg_local[lu] == pytest.approx(graph.weighted_degree(int(u)))

    @pytest.mark.parametrize("seed", range(4))
    def test_reduction_losslessness(self, seed):
        rng = np.random.default_rng(100 + seed)
        pairs, gt = random_connected_instance(rng, 60, 5)
        graph, labels = build_graph(60, pairs, gt)
        full = harmonic_solve(graph, labels)
        reduced_labels = labels.copy()
        stlp_solve(graph, reduced_labels)
        unl = labels.unlabeled_ids(graph)
        np.testing.assert_allclose(reduced_labels.f[unl], full[unl], atol=1e-9)

    def test_empty_class_errors(self):
        graph, labels = build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)], gt={0: 0})
        with pytest.raises(ValidationError, match="both classes"):
            stlp_reduce(graph, labels)

    def test_empty_batch_keeps_previous_solution(self):
        rng = np.random.default_rng(9)
        pairs, gt = random_connected_instance(rng, 30, 4)
        graph, labels = DynamicGraph(), LabelState()
        batch = graph_as_batch(30, pairs, gt)
        labels, _ = stlp_batch_solve(graph, labels, batch, EngineConfig())
        before = labels.f.copy()
        labels, _ = stlp_batch_solve(
            graph, labels, BatchUpdate.from_records(t=1), EngineConfig()
        )
        np.testing.assert_allclose(labels.f, before, atol=1e-12)

    def test_whole_graph_batch_equals_full_harmonic(self):
        rng = np.random.default_rng(10)
        pairs, gt = random_connected_instance(rng, 50, 5)
        graph, labels = DynamicGraph(), LabelState()
        labels, _ = stlp_batch_solve(graph, labels, graph_as_batch(50, pairs, gt), EngineConfig())
        full = harmonic_solve(graph, labels)
        unl = labels.unlabeled_ids(graph)
        np.testing.assert_allclose(labels.f[unl], full[unl], atol=1e-9)


class TestOracleChain:
    @pytest.mark.parametrize("seed", range(6))
    def test_all_solvers_agree(self, seed):
        rng = np.random.default_rng(300 + seed)
        n = int(rng.integers(20, 200))
        pairs, gt = random_connected_instance(rng, n, 5)
        batch = graph_as_batch(n, pairs, gt)
        deep = EngineConfig(delta=1e-9, max_iterations=1_000_000)
        results = {}

        graph, labels = DynamicGraph(), LabelState()
        labels, _ = apply_batch(graph, labels, batch, deep)
        results["dynlp"] = labels.f.copy()
        unl = labels.unlabeled_ids(graph)
        results["oracle"] = harmonic_solve(graph, labels)

        graph2, labels2 = DynamicGraph(), LabelState()
        labels2, _ = itlp_batch_solve(graph2, labels2, batch, deep)
        results["itlp"] = labels2.f.copy()

        graph3, labels3 = DynamicGraph(), LabelState()
        labels3, _ = stlp_batch_solve(graph3, labels3, batch, EngineConfig())
        results["stlp"] = labels3.f.copy()

        for a in ("dynlp", "itlp", "stlp"):
            np.testing.assert_allclose(
                results[a][unl], results["oracle"][unl], atol=1e-6,
                err_msg=f"{a} disagrees with the closed form",
            )
