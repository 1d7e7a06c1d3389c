"""Shared fixtures and synthetic-network helpers for the test suite."""

import os
from pathlib import Path

import numpy as np
import pytest

from linkmix.network import Network
from linkmix import oracle
from linkmix.sampler import directed_links, make_engine

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def data_root() -> Path:
    """Directory of prepared datasets (see `linkmix fetch-data`)."""
    return Path(os.environ.get("LINKMIX_DATA", REPO_ROOT / "data"))


def require_dataset(name: str, root: Path):
    """Skip the calling test when a prepared dataset is missing."""
    from linkmix.datasets import dataset_available

    if not dataset_available(name, root):
        pytest.skip(
            f"dataset {name!r} not prepared under {root}; run "
            f"`linkmix fetch-data --dest {root}` (needs outbound network access) "
            f"or drop pre-converted files there"
        )


def planted_partition(n_blocks, block_size, within_degree, between_edges, seed):
    """Assortative block network: dense blocks plus sparse cross links."""
    rng = np.random.default_rng(seed)
    m = n_blocks * block_size
    edges = []
    for b in range(n_blocks):
        nodes = np.arange(b * block_size, (b + 1) * block_size)
        for _ in range(within_degree // 2):
            cycle = rng.permutation(nodes)
            edges.extend(zip(cycle, np.roll(cycle, 1)))
    for _ in range(between_edges):
        b1, b2 = rng.choice(n_blocks, size=2, replace=False)
        i = rng.integers(b1 * block_size, (b1 + 1) * block_size)
        j = rng.integers(b2 * block_size, (b2 + 1) * block_size)
        edges.append((i, j))
    edges = np.asarray(edges, dtype=np.int64)
    labels = np.repeat(np.arange(n_blocks), block_size)
    return Network(node_count=m, edges=edges, directed=False), labels


def disjoint_blocks(n_blocks, block_size, degree, seed):
    """Disjoint blocks with identical regular degree (union of Hamilton cycles)."""
    assert degree % 2 == 0
    rng = np.random.default_rng(seed)
    edges = []
    for b in range(n_blocks):
        nodes = np.arange(b * block_size, (b + 1) * block_size)
        for _ in range(degree // 2):
            cycle = rng.permutation(nodes)
            edges.extend(zip(cycle, np.roll(cycle, 1)))
    edges = np.asarray(edges, dtype=np.int64)
    return Network(node_count=n_blocks * block_size, edges=edges, directed=False)


def empirical_posterior(net, hp, n_samples, thin, seed, burn=500, engine="auto"):
    """Thinned Gibbs frequencies over assignment states (DP: partitions)."""
    rng = np.random.default_rng(seed)
    src, _ = directed_links(net, hp.model)
    n_links = len(src)
    order = rng.permutation(n_links)
    eng = make_engine(net, hp, order, engine)
    eng.init_sequential(rng.random(n_links))
    for _ in range(burn):
        eng.sweep(rng.random(n_links))
    counts: dict = {}
    for _ in range(n_samples):
        for _ in range(thin):
            eng.sweep(rng.random(n_links))
        state = tuple(int(c) for c in eng.assignments())
        if hp.prior == "dp":
            state = oracle._as_blocks(state)
        counts[state] = counts.get(state, 0) + 1
    return {k: v / n_samples for k, v in counts.items()}


def moving_average(x, window):
    x = np.asarray(x, dtype=np.float64)
    kernel = np.ones(window) / window
    return np.convolve(x, kernel, mode="valid")


def trace_flat_or_rising(trace, window=100, start=500, n_sigma=2.0):
    """True when no windowed mean after ``start`` drops n_sigma under the running max.

    Sigma is the per-sweep score standard deviation over the post-start
    region: the natural noise scale of the trace itself.  (Any finer scale,
    such as the window-mean standard error, would flag even a perfectly
    stationary series, since the running maximum of many window means sits
    several of their sigmas above the mean.)  A converged chain keeps its
    window means well inside n_sigma per-sweep deviations of the best seen;
    a trace that genuinely decays trips the check.
    """
    trace = np.asarray(trace, dtype=np.float64)
    ma = moving_average(trace, window)
    sigma = float(trace[start:].std(ddof=1))
    running_max = np.maximum.accumulate(ma)
    offset = max(0, start - window + 1)
    drop = running_max[offset:] - ma[offset:]
    return bool((drop <= n_sigma * sigma).all()), float(drop.max() / sigma if sigma else 0.0)
