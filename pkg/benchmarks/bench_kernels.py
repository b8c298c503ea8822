#!/usr/bin/env python3
"""Benchmark the compiled CSR kernels against the numpy fallback.

Times one full-frontier evaluation round (jacobi_step), the fused
frontier loop (jacobi_run), and a sequential sweep (gauss_seidel_step)
on seeded synthetic graphs, and prints a table with speedups.

    python benchmarks/bench_kernels.py --n 200000 --avg-degree 5 --repeats 5
"""

import argparse
import time

import numpy as np

from dynlp.builder import SyntheticSpec, erdos_renyi
from dynlp.graph import DynamicGraph
from dynlp.kernels import available_backends
from dynlp.labels import LabelState


def build_case(n, avg_degree, seed):
    data = erdos_renyi(SyntheticSpec(n=n, avg_degree=avg_degree, seed=seed, labeled_fraction=0.02))
    graph = DynamicGraph.from_edge_list(n, data.edges)
    labels = LabelState(n)
    labels.set_ground_truth(data.gt_ids, data.gt_classes)
    rng = np.random.default_rng(seed)
    unl = labels.unlabeled_ids(graph)
    labels.f[unl] = rng.uniform(0, 1, len(unl))
    csr = graph.csr()
    frontier = unl[csr.degrees[unl] > 0]
    return graph, labels, frontier


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def bench_backend(name, backend, graph, labels, frontier, threads, repeats):
    csr = graph.csr()
    n = graph.num_slots
    results = {}

    vals = np.empty(len(frontier))
    deltas = np.empty(len(frontier))
    results["jacobi_step"] = time_call(
        lambda: backend.jacobi_step(
            csr.indptr, csr.indices, csr.weights, labels.gt, labels.f,
            frontier, vals, deltas, threads,
        ),
        repeats,
    )

    eligible = (graph.alive & (labels.gt[:n] == -1) & (csr.degrees > 0)).view(np.uint8)

    def run_driver():
        f = labels.f.copy()
        backend.jacobi_run(
            csr.indptr, csr.indices, csr.weights, labels.gt, f,
            frontier, eligible.copy(), 1e-3, 200, threads,
        )

    results["jacobi_run(<=200 rounds)"] = time_call(run_driver, max(1, repeats // 2))

    def run_gs():
        f = labels.f.copy()
        d = np.empty(len(frontier))
        backend.gauss_seidel_step(
            csr.indptr, csr.indices, csr.weights, labels.gt, f, frontier, d
        )

    results["gauss_seidel_step"] = time_call(run_gs, repeats)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--avg-degree", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    import os

    threads = args.threads or os.cpu_count() or 1
    graph, labels, frontier = build_case(args.n, args.avg_degree, args.seed)
    print(
        f"n={args.n} edges={graph.edge_count} frontier={len(frontier)} threads={threads}"
    )

    backends = available_backends()
    all_results = {
        name: bench_backend(name, backend, graph, labels, frontier, threads, args.repeats)
        for name, backend in backends.items()
    }

    kernels = list(next(iter(all_results.values())))
    width = max(len(k) for k in kernels) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{name:>14}" for name in all_results)
    if "compiled" in all_results and "python" in all_results:
        header += f"{'speedup':>10}"
    print(header)
    for kernel in kernels:
        row = f"{kernel:<{width}}"
        for name in all_results:
            row += f"{all_results[name][kernel] * 1000:>12.2f}ms"
        if "compiled" in all_results and "python" in all_results:
            ratio = all_results["python"][kernel] / all_results["compiled"][kernel]
            row += f"{ratio:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
