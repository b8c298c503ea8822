"""Shared test utilities: independent oracles and instance generators."""

import numpy as np

from dynlp.graph import BatchUpdate, DynamicGraph, EdgeList
from dynlp.labels import LabelState
from dynlp.stream import single_batch_stream


class UnionFind:
    """Sequential union-find, the reference for component labelings."""

    def __init__(self, ids):
        self.parent = {int(i): int(i) for i in ids}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return {frozenset(g) for g in out.values()}


def union_find_partition(ids, edge_pairs):
    uf = UnionFind(ids)
    for a, b in edge_pairs:
        uf.union(int(a), int(b))
    return uf.groups()


def build_graph(n, edge_pairs, gt=None):
    """Graph over 0..n-1 plus a LabelState pinned from {vertex: class}."""
    edges = EdgeList.from_pairs(edge_pairs)
    graph = DynamicGraph.from_edge_list(n, edges)
    labels = LabelState(n)
    if gt:
        ids = np.array(sorted(gt), dtype=np.int64)
        labels.set_ground_truth(ids, np.array([gt[int(i)] for i in ids]))
    return graph, labels


def graph_as_batch(n, edge_pairs, gt=None):
    """The same instance expressed as a single whole-graph batch."""
    gt = gt or {}
    ids = np.array(sorted(gt), dtype=np.int64)
    classes = np.array([gt[int(i)] for i in ids], dtype=np.int8)
    return single_batch_stream(n, EdgeList.from_pairs(edge_pairs), ids, classes)[0]


def random_connected_instance(rng, n, avg_degree, per_class=None):
    """Random weighted graph where every vertex can reach a labeled one.

    Components without a ground-truth member get stitched to labeled
    vertex 0's component.  Returns (edge pairs, gt dict).
    """
    per_class = per_class or max(1, round(0.01 * n))
    p = min(1.0, avg_degree / (n - 1))
    pairs = {}
    m = rng.binomial(n * (n - 1) // 2, p)
    while len(pairs) < m:
        a, b = rng.integers(0, n, 2)
        if a != b:
            key = (min(int(a), int(b)), max(int(a), int(b)))
            if key not in pairs:
                pairs[key] = float(rng.uniform(0.1, 1.0))
    order = rng.permutation(n)
    gt = {int(v): 0 for v in order[:per_class]}
    gt.update({int(v): 1 for v in order[per_class : 2 * per_class]})
    # Stitch unreachable components onto a labeled vertex.
    groups = union_find_partition(range(n), pairs.keys())
    anchor = int(order[0])
    for group in sorted(groups, key=min):
        if not any(v in gt for v in group):
            pairs[(min(min(group), anchor), max(min(group), anchor))] = float(
                rng.uniform(0.1, 1.0)
            )
    edge_pairs = [(a, b, w) for (a, b), w in sorted(pairs.items())]
    return edge_pairs, gt


def alpha_average_oracle(graph, labels, u):
    """Independent weighted-average computation for one vertex."""
    nbrs, w = graph.neighbors(u)
    total = w.sum()
    if total == 0:
        return 0.5
    return float((w * labels.f[nbrs]).sum() / total)
