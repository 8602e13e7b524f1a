"""Hierarchical graph clustering by structural information in hyperbolic space."""

import json

from ._hypertropy import (
    CheckpointError,
    Graph,
    SizeCapError,
    ari,
    auc_score,
    graph_conductance,
    load_graph,
    nmi,
    one_dim_entropy,
    parse_edge_list,
    two_level_value,
)
from . import _hypertropy as _core

__all__ = [
    "CheckpointError", "Graph", "SizeCapError", "ari", "auc_score", "brute_force_entropy",
    "cluster", "cse_greedy", "graph_conductance", "load_graph", "nmi", "normalized_entropy",
    "one_dim_entropy", "parse_edge_list", "two_level_value",
]


def brute_force_entropy(graph):
    """Exact height-2 optimum for graphs with at most 7 nodes."""
    return json.loads(_core.brute_force_entropy(graph))


def normalized_entropy(graph, height=2):
    return json.loads(_core.normalized_entropy(graph, height))


def cse_greedy(graph):
    return json.loads(_core.cse_greedy(graph))


def cluster(graph, model=None, train=None, seeds=(0,), k=None, threads=0):
    """Train one model per seed and return the report as a dict.

    `model` and `train` override the default configurations key by key.
    The result carries the metrics of the lowest-loss seed at top level and
    per-seed labels, loss histories and trees under "runs".
    """
    m = json.loads(_core.default_model_config())
    m.update(model or {})
    t = json.loads(_core.default_train_config())
    t.update(train or {})
    report = _core.cluster(graph, json.dumps(m), json.dumps(t), list(seeds), k, threads)
    return json.loads(report)
