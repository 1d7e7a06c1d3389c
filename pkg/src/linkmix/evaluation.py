"""Scoring fitted chains against ground truth and network structure.

Node memberships are count shares per snapshot, averaged over a chain's
snapshots.  Ground-truth agreement is summarized by the perplexity of
predicting a node's true class from its component: 1.0 for a perfect
single-class-per-component fit, the class count when components carry no
class information.  Both perplexity and modularity are invariant under
component relabeling, so chains are aggregated without any cross-chain
component alignment.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .kernels import ICMC
from .network import GroundTruth, Network
from .sampler import ChainResult, directed_links

CELL_SMOOTHING = 1e-9


def memberships_from_samples(
    result: ChainResult, net: Network, role: str = "sender"
) -> tuple[np.ndarray, np.ndarray]:
    """Average per-node membership over a chain's snapshots.

    For the undirected model a node's membership in a component is its
    share of link endpoints there; for the directed model it is the share
    of its sent (``role="sender"``) or received (``role="receiver"``)
    links.  Nodes with no counts fall back to a uniform distribution over
    the components occupied in the snapshot.

    Returns ``(component_ids, p)`` with ``p`` of shape (nodes, components);
    rows sum to 1.
    """
    if result.samples.shape[0] == 0:
        raise ValueError("chain has no snapshots")
    src, dst = directed_links(net, result.model)
    if result.samples.shape[1] != len(src):
        raise ValueError(
            f"snapshots cover {result.samples.shape[1]} links but the network "
            f"yields {len(src)}; was it fitted with different preprocessing?"
        )
    m = net.node_count

    if result.n_components is not None:
        ids = np.arange(result.n_components, dtype=np.int64)
    else:
        ids = np.unique(result.samples).astype(np.int64)
    columns = {int(c): idx for idx, c in enumerate(ids)}
    n_cols = len(ids)

    acc = np.zeros((m, n_cols), dtype=np.float64)
    for snapshot in result.samples:
        cols = np.searchsorted(ids, snapshot)
        counts = np.zeros((m, n_cols), dtype=np.float64)
        if result.model == ICMC:
            np.add.at(counts, (src, cols), 1.0)
            np.add.at(counts, (dst, cols), 1.0)
        elif role == "sender":
            np.add.at(counts, (src, cols), 1.0)
        elif role == "receiver":
            np.add.at(counts, (dst, cols), 1.0)
        else:
            raise ValueError(f"role must be 'sender' or 'receiver', got {role!r}")
        totals = counts.sum(axis=1, keepdims=True)
        occupied = counts.sum(axis=0) > 0
        fallback = occupied / occupied.sum()
        p = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), fallback)
        acc += p
    return ids, acc / result.samples.shape[0]


def confusion(memberships: np.ndarray, truth: GroundTruth) -> np.ndarray:
    """Accumulated membership mass per (true class, found component).

    ``counts[c][z]`` sums the membership in component z of the nodes whose
    class is c; unlabeled nodes are skipped.  With averaged memberships the
    total mass equals the number of labeled nodes.
    """
    if memberships.shape[1] < 1:
        raise ValueError("membership matrix has no components")
    if not truth.classes:
        raise ValueError("ground truth labels no nodes")
    out = np.zeros((truth.n_classes, memberships.shape[1]), dtype=np.float64)
    for node, cls in truth.classes.items():
        out[cls] += memberships[node]
    return out


def ground_truth_perplexity(conf: np.ndarray) -> float:
    """Perplexity of predicting the true class from the found component.

    Exponentiated membership-weighted cross-entropy of the per-component
    class distributions ``p(class | component)``.  Cells are smoothed by a
    tiny constant so empty components are well-defined.  Lower is better;
    the floor is 1.0.
    """
    conf = np.asarray(conf, dtype=np.float64)
    if conf.sum() <= 0:
        raise ValueError("confusion matrix has no mass")
    conf = conf + CELL_SMOOTHING
    col_sums = conf.sum(axis=0, keepdims=True)
    log_p_class_given_comp = np.log(conf / col_sums)
    total = conf.sum()
    return float(np.exp(-(conf * log_p_class_given_comp).sum() / total))


def hard_partition(memberships: np.ndarray) -> np.ndarray:
    """Argmax component per node; ties break toward the lowest column."""
    return np.asarray(memberships).argmax(axis=1)


def modularity(net: Network, partition) -> float:
    """Newman-Girvan modularity of a hard node partition.

    The within-community edge fraction minus the expected fraction under
    the degree-preserving null model: ``sum_z (e_zz - a_z^2)``, where
    ``e_zz`` is the fraction of edges with both endpoints in z and ``a_z``
    the fraction of edge endpoints in z.  Multi-edges count with their
    multiplicity; a self-loop is a within-community edge contributing both
    endpoints to its node's community.
    """
    if net.directed:
        raise ValueError("modularity is defined here for undirected networks")
    if net.n_edges < 1:
        raise ValueError("network has no links")
    partition = np.asarray(partition, dtype=np.int64)
    if partition.shape[0] != net.node_count:
        raise ValueError("partition length must equal node_count")
    n_parts = int(partition.max()) + 1
    ci = partition[net.edges[:, 0]]
    cj = partition[net.edges[:, 1]]
    n_links = net.n_edges
    within = np.bincount(ci[ci == cj], minlength=n_parts) / n_links
    endpoints = (
        np.bincount(ci, minlength=n_parts) + np.bincount(cj, minlength=n_parts)
    ) / (2.0 * n_links)
    return float((within - endpoints**2).sum())


def aggregate_chains(values) -> tuple[float, tuple[float, float]]:
    """Sample mean and 95% t-interval of per-chain scores."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ValueError("need at least two chains to aggregate")
    mean = float(values.mean())
    sem = float(values.std(ddof=1) / np.sqrt(values.size))
    if sem == 0.0:
        return mean, (mean, mean)
    half = float(stats.t.ppf(0.975, values.size - 1)) * sem
    return mean, (mean - half, mean + half)


def chain_perplexity(
    result: ChainResult, net: Network, truth: GroundTruth, role: str = "sender"
) -> float:
    """Membership -> confusion -> perplexity for one chain."""
    _, p = memberships_from_samples(result, net, role=role)
    return ground_truth_perplexity(confusion(p, truth))
