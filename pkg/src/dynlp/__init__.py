"""Incremental label propagation on evolving sparse graphs.

A frontier-driven engine applies batched vertex insertions/deletions
and repropagates only where labels can still move, alongside full
recompute, short-circuit, and closed-form baselines, dataset builders,
batch-stream generation, and a benchmark harness.
"""

from .baselines import (
    LaplacianBlocks,
    ReducedGraph,
    build_laplacian_blocks,
    harmonic_solve,
    itlp_batch_solve,
    itlp_solve,
    oracle_batch_solve,
    stlp_batch_solve,
    stlp_reduce,
    stlp_solve,
)
from .builder import (
    FeatureMatrix,
    PlantedModel,
    SyntheticSpec,
    erdos_renyi,
    knn_graph,
)
from .components import (
    ComponentLabeling,
    IntraBatchGraph,
    default_tau,
    find_components,
    sparsify,
)
from .engine import (
    EngineConfig,
    Frontier,
    IterationReport,
    apply_batch,
    apply_batch_structure,
    initialize_component_labels,
    propagate_step,
    run_batches,
)
from .errors import FileFormatError, ValidationError
from .graph import BatchUpdate, DynamicGraph, EdgeList
from .harness import (
    AccuracyReport,
    RunReport,
    binary_accuracy,
    compare_methods,
    dirichlet_energy,
    run_method,
)
from .labels import LabelState
from .stream import StreamSpec, make_stream, single_batch_stream

__version__ = "0.1.0"
