"""Threshold sparsification and hook/jump connected-component labeling.

Components are found on the intra-batch graph only: the vertices
inserted in one timestep and the edges between them whose weight
exceeds tau.  The solver alternates a hook pass (each vertex and its
root lower their parent to the minimum pre-pass parent across incident
edges) with pointer jumping until idempotent, stopping when a full
round changes nothing.  Parents only decrease, so the fixpoint
partition is schedule-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import DynamicGraph, EdgeList


def sparsify(edges: EdgeList, tau: float) -> EdgeList:
    """Edges with weight strictly greater than tau; the input is untouched."""
    keep = edges.w > tau
    return EdgeList(edges.u[keep], edges.v[keep], edges.w[keep])


def default_tau(graph: DynamicGraph) -> float:
    """Mean live edge weight, each undirected edge counted once."""
    edges = graph.live_edges()
    if len(edges) == 0:
        raise ValidationError("graph has no edges; supply tau explicitly")
    return float(edges.w.mean())


@dataclass
class IntraBatchGraph:
    """The batch's inserted vertices with their tau-filtered internal edges."""

    vertices: np.ndarray
    edges: EdgeList
    tau: float

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.int64)
        if len(self.edges):
            member = np.isin(self.edges.u, self.vertices) & np.isin(self.edges.v, self.vertices)
            if not member.all():
                raise ValidationError("intra-batch edge endpoint outside the batch")
            if not (self.edges.w > self.tau).all():
                raise ValidationError("intra-batch edge at or below tau")

    @classmethod
    def build(cls, vertices: np.ndarray, edges: EdgeList, tau: float) -> "IntraBatchGraph":
        """Filter an edge list down to intra-batch pairs above tau."""
        vertices = np.asarray(vertices, dtype=np.int64)
        if len(edges):
            member = np.isin(edges.u, vertices) & np.isin(edges.v, vertices)
            edges = EdgeList(edges.u[member], edges.v[member], edges.w[member])
        return cls(vertices, sparsify(edges, tau), tau)


@dataclass
class ComponentLabeling:
    """Result of component finding over an IntraBatchGraph.

    parent[i] is the representative (minimum member id) of vertices[i];
    component_id[i] is its dense index, assigned in ascending order of
    representative id.  jump_rounds counts pointer-jumping passes.
    """

    vertices: np.ndarray
    parent: np.ndarray
    component_id: np.ndarray
    num_components: int
    jump_rounds: int

    def groups(self) -> list[np.ndarray]:
        return [
            self.vertices[self.component_id == c] for c in range(self.num_components)
        ]


def find_components(g: IntraBatchGraph) -> ComponentLabeling:
    n = len(g.vertices)
    order = np.argsort(g.vertices, kind="stable")
    verts = g.vertices[order]
    if len(np.unique(verts)) != n:
        raise ValidationError("duplicate vertex in intra-batch graph")
    eu = np.searchsorted(verts, g.edges.u)
    ev = np.searchsorted(verts, g.edges.v)

    par = np.arange(n, dtype=np.int64)
    rounds = 0
    while True:
        before = par.copy()
        if len(eu):
            # Hook each endpoint's root as well as the endpoint itself
            # toward the other side's pre-pass parent.  Root hooking
            # merges whole trees per round, which is what keeps the
            # round count logarithmic; parents only decrease, so the
            # fixpoint is schedule-independent.
            np.minimum.at(par, before[eu], before[ev])
            np.minimum.at(par, before[ev], before[eu])
            np.minimum.at(par, eu, before[ev])
            np.minimum.at(par, ev, before[eu])
        while True:
            jumped = par[par]
            if np.array_equal(jumped, par):
                break
            par = jumped
        rounds += 1
        if np.array_equal(par, before):
            break

    roots = np.unique(par)
    comp = np.searchsorted(roots, par)
    return ComponentLabeling(
        vertices=verts,
        parent=verts[par],
        component_id=comp,
        num_components=len(roots),
        jump_rounds=rounds,
    )


def labeling_to_csv(labeling: ComponentLabeling) -> str:
    lines = ["vertex,component"]
    for v, c in zip(labeling.vertices, labeling.component_id):
        lines.append(f"{int(v)},{int(c)}")
    return "\n".join(lines) + "\n"
