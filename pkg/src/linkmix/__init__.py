"""Latent component models for networks, fitted by collapsed Gibbs sampling.

Two generative models over links: an undirected bag-of-links model whose
components act like communities (``ICMc``), and a directed per-sender
mixture in the LDA family (``SSNLDA``).  Both support a finite symmetric
Dirichlet prior over components or a Dirichlet-process prior with a
data-driven component count, and scale through sparse count tables plus a
partial-sum tree for logarithmic-time weighted draws.
"""

from .estimators import ICMc, SSNLDA
from .kernels import Hyperparameters, chooser
from .network import (
    EdgeListError,
    EmptyNetworkError,
    GroundTruth,
    Network,
    extract_giant_component,
    filter_ground_truth,
    load_edge_list,
    load_labels,
    symmetrize,
    write_edge_list,
)
from .evaluation import (
    aggregate_chains,
    chain_perplexity,
    confusion,
    ground_truth_perplexity,
    hard_partition,
    memberships_from_samples,
    modularity,
)
from .sampler import (
    ChainConfig,
    ChainResult,
    load_chain,
    predict_new_node,
    run_chain,
    run_chains,
    save_chain,
    suggested_iterations,
)
from .tree import PartialSumTree

__version__ = "0.1.0"

__all__ = [
    "ICMc",
    "SSNLDA",
    "Hyperparameters",
    "chooser",
    "Network",
    "GroundTruth",
    "EdgeListError",
    "EmptyNetworkError",
    "load_edge_list",
    "load_labels",
    "write_edge_list",
    "symmetrize",
    "extract_giant_component",
    "filter_ground_truth",
    "ChainConfig",
    "ChainResult",
    "run_chain",
    "run_chains",
    "save_chain",
    "load_chain",
    "predict_new_node",
    "suggested_iterations",
    "memberships_from_samples",
    "confusion",
    "ground_truth_perplexity",
    "modularity",
    "hard_partition",
    "aggregate_chains",
    "chain_perplexity",
    "PartialSumTree",
    "__version__",
]
