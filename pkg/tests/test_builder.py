import numpy as np
import pytest

from dynlp.builder import (
    FeatureMatrix,
    PlantedModel,
    SyntheticSpec,
    erdos_renyi,
    knn_graph,
    read_features_csv,
    select_ground_truth,
)
from dynlp.errors import FileFormatError, ValidationError


def brute_force_knn(rows, k):
    """All-pairs cosine ranking with low-id tie-break, as directed pairs."""
    x = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    sims = x @ x.T
    n = len(rows)
    out = set()
    for i in range(n):
        ranked = sorted((j for j in range(n) if j != i), key=lambda j: (-sims[i, j], j))
        for j in ranked[:k]:
            out.add((i, j, sims[i, j]))
    return out


class TestKnnGraph:
    def test_identical_vectors_form_triangle(self):
        feats = FeatureMatrix(np.array([[1.0, 2.0]] * 3))
        edges = knn_graph(feats, k=1)
        pairs = {(int(u), int(v)) for u, v in zip(edges.u, edges.v)}
        # ties break toward lower ids: 0->1, 1->0, 2->0; union = two edges
        assert pairs == {(0, 1), (0, 2)}
        assert np.allclose(edges.w, 1.0)

    def test_orthogonal_vectors_prune_to_empty(self):
        feats = FeatureMatrix(np.eye(3))
        edges = knn_graph(feats, k=1)
        assert len(edges) == 0

    def test_affine_mode_keeps_orthogonal_pairs(self):
        feats = FeatureMatrix(np.eye(3))
        edges = knn_graph(feats, k=1, similarity_mode="affine")
        assert len(edges) > 0
        assert np.allclose(edges.w, 0.5)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.normal(size=(40, 6))
        k = 3
        feats = FeatureMatrix(rows)
        edges = knn_graph(feats, k=k, similarity_mode="affine")
        directed = brute_force_knn(rows, k)
        expected = {}
        for i, j, cos in directed:
            key = (min(i, j), max(i, j))
            expected[key] = max(expected.get(key, 0.0), (1 + cos) / 2)
        got = {
            (int(u), int(v)): w for u, v, w in zip(edges.u, edges.v, edges.w)
        }
        assert set(got) == set(expected)
        for key, w in expected.items():
            assert got[key] == pytest.approx(w, abs=1e-12)

    def test_symmetrized_union_degree_at_least_k(self):
        rng = np.random.default_rng(11)
        feats = FeatureMatrix(rng.normal(size=(10, 4)))
        edges = knn_graph(feats, k=3, similarity_mode="affine")
        deg = np.zeros(10, dtype=int)
        for u, v, _ in edges:
            deg[u] += 1
            deg[v] += 1
        assert (deg >= 3).all()

    def test_weights_in_unit_interval(self):
        rng = np.random.default_rng(3)
        feats = FeatureMatrix(rng.normal(size=(30, 5)))
        for mode in ("prune", "affine"):
            edges = knn_graph(feats, k=4, similarity_mode=mode)
            assert (edges.w > 0).all() and (edges.w <= 1).all()

    def test_zero_row_rejected(self):
        with pytest.raises(ValidationError, match="row 1"):
            FeatureMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_bad_k_rejected(self):
        feats = FeatureMatrix(np.eye(3))
        with pytest.raises(ValidationError):
            knn_graph(feats, k=0)
        with pytest.raises(ValidationError):
            knn_graph(feats, k=3)


class TestErdosRenyi:
    def test_mean_degree_close_to_requested(self):
        data = erdos_renyi(SyntheticSpec(n=1000, avg_degree=5, seed=7))
        realized = 2 * len(data.edges) / data.n
        assert realized == pytest.approx(5, rel=0.10)

    def test_ground_truth_counts_exact(self):
        data = erdos_renyi(SyntheticSpec(n=10_000, avg_degree=3, seed=1, labeled_fraction=0.01))
        assert len(data.gt_ids) == 100
        assert int((data.gt_classes == 0).sum()) == 50
        assert int((data.gt_classes == 1).sum()) == 50

    def test_determinism_byte_for_byte(self):
        spec = SyntheticSpec(n=500, avg_degree=5, seed=11)
        a = erdos_renyi(spec)
        b = erdos_renyi(SyntheticSpec(n=500, avg_degree=5, seed=11))
        assert np.array_equal(a.edges.u, b.edges.u)
        assert np.array_equal(a.edges.v, b.edges.v)
        assert a.edges.w.tobytes() == b.edges.w.tobytes()
        assert np.array_equal(a.gt_ids, b.gt_ids)

    def test_seed_changes_output(self):
        a = erdos_renyi(SyntheticSpec(n=500, avg_degree=5, seed=1))
        b = erdos_renyi(SyntheticSpec(n=500, avg_degree=5, seed=2))
        assert a.edges.w.tobytes() != b.edges.w.tobytes()

    def test_planted_weights_separate_classes(self):
        data = erdos_renyi(SyntheticSpec(n=400, avg_degree=6, seed=3))
        intra = data.classes[data.edges.u] == data.classes[data.edges.v]
        assert data.edges.w[intra].min() >= 0.6
        assert data.edges.w[~intra].max() <= 0.4

    def test_weights_positive_unit_interval(self):
        data = erdos_renyi(SyntheticSpec(n=300, avg_degree=5, seed=5))
        assert (data.edges.w > 0).all() and (data.edges.w <= 1).all()

    def test_degenerate_specs_rejected(self):
        with pytest.raises(ValidationError):
            erdos_renyi(SyntheticSpec(n=1, avg_degree=1, seed=0))
        with pytest.raises(ValidationError):
            erdos_renyi(SyntheticSpec(n=10, avg_degree=20, seed=0))
        with pytest.raises(ValidationError):
            erdos_renyi(SyntheticSpec(n=10, avg_degree=3, seed=0, labeled_fraction=0))


class TestFeaturesCsv:
    def test_plain_features(self):
        feats = read_features_csv("0,1.5,2.5\n1,3.5,4.5\n")
        assert feats.rows.shape == (2, 2)
        assert feats.true_labels is None

    def test_label_column_detected(self):
        feats = read_features_csv("0,1,0.5,0.25\n1,0,0.75,0.5\n")
        assert feats.true_labels.tolist() == [1, 0]
        assert feats.rows.shape == (2, 2)

    def test_forced_unlabeled_keeps_binary_column(self):
        feats = read_features_csv("0,1,0.5\n1,0,0.75\n", labeled=False)
        assert feats.true_labels is None
        assert feats.rows.shape == (2, 2)

    def test_malformed_rows_rejected(self):
        with pytest.raises(FileFormatError):
            read_features_csv("0,1.0\n1\n")
        with pytest.raises(FileFormatError):
            read_features_csv("0,1.0,2.0\n1,3.0\n")
        with pytest.raises(FileFormatError):
            read_features_csv("")

    def test_select_ground_truth_seeded(self):
        labels = np.array([0, 1] * 50)
        ids_a, cls_a = select_ground_truth(labels, 0.1, seed=4)
        ids_b, cls_b = select_ground_truth(labels, 0.1, seed=4)
        assert np.array_equal(ids_a, ids_b)
        assert int((cls_a == 0).sum()) == 5 and int((cls_a == 1).sum()) == 5
