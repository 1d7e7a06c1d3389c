"""Brute-force reference implementations for tiny instances.

Everything here evaluates exact collapsed joint distributions by direct
log-gamma arithmetic and full enumeration.  It is deliberately slow and
independent of the incremental count bookkeeping used by the samplers, so
it can serve as ground truth for the conditional weights and for sampler
stationarity.  Log space throughout; exponentiation only after subtracting
the maximum.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import gammaln

from .kernels import DIRICHLET, DP, ICMC, Hyperparameters, chooser, icmc_weight, ssnlda_weight

ENUMERATION_BUDGET = 10**6


class EnumerationBudgetError(RuntimeError):
    """The instance is too large to enumerate."""


# ---------------------------------------------------------------------------
# count tallies (kept dumb on purpose: full recount every call)
# ---------------------------------------------------------------------------


def icmc_count_tables(assignments, edges, node_count, n_components):
    """Dense (n_z, k_zi) tables implied by a full assignment vector."""
    z = np.asarray(assignments, dtype=np.int64)
    n = np.zeros(n_components, dtype=np.int64)
    k = np.zeros((n_components, node_count), dtype=np.int64)
    for (i, j), c in zip(np.asarray(edges), z):
        n[c] += 1
        k[c, i] += 1
        k[c, j] += 1
    return n, k


def ssnlda_count_tables(assignments, edges, node_count, n_components):
    """Dense sender (n_iz) and receiver (k_zj) tables for directed links."""
    z = np.asarray(assignments, dtype=np.int64)
    n_send = np.zeros((node_count, n_components), dtype=np.int64)
    k_recv = np.zeros((n_components, node_count), dtype=np.int64)
    for (i, j), c in zip(np.asarray(edges), z):
        n_send[i, c] += 1
        k_recv[c, j] += 1
    return n_send, k_recv


def _as_blocks(assignments):
    """Canonical partition labels (first-appearance order), as a tuple."""
    relabel = {}
    out = []
    for c in assignments:
        if c not in relabel:
            relabel[c] = len(relabel)
        out.append(relabel[c])
    return tuple(out)


# ---------------------------------------------------------------------------
# exact log joints
# ---------------------------------------------------------------------------


def icmc_log_joint(assignments, edges, node_count, hp: Hyperparameters) -> float:
    """log p(links, assignments | hyperparameters) for the bag-of-links model.

    Includes the prior normalizers, so values are comparable across
    assignments and can be summed to a marginal likelihood.
    """
    edges = np.asarray(edges)
    n_links = len(edges)
    m = node_count
    beta, alpha = hp.beta, hp.alpha

    if hp.prior == DIRICHLET:
        kcomp = hp.n_components
        n, k = icmc_count_tables(assignments, edges, m, kcomp)
        log_p = kcomp * (gammaln(m * beta) - m * gammaln(beta))
        log_p += gammaln(kcomp * alpha) - kcomp * gammaln(alpha)
        log_p += gammaln(k + beta).sum() - gammaln(2 * n + m * beta).sum()
        log_p += gammaln(n + alpha).sum() - gammaln(n_links + kcomp * alpha)
        return float(log_p)

    blocks = _as_blocks(assignments)
    n_blocks = (max(blocks) + 1) if blocks else 0
    n, k = icmc_count_tables(blocks, edges, m, n_blocks)
    log_p = n_blocks * (gammaln(m * beta) - m * gammaln(beta))
    log_p += gammaln(k + beta).sum() - gammaln(2 * n + m * beta).sum()
    log_p += n_blocks * math.log(alpha) + gammaln(alpha) - gammaln(alpha + n_links)
    log_p += gammaln(n).sum()
    return float(log_p)


def ssnlda_log_joint(assignments, edges, node_count, hp: Hyperparameters) -> float:
    """log p(links, assignments) for the per-sender mixture model.

    The Dirichlet case is the standard collapsed mixed-membership joint.
    The DP case composes the same receiver factor with one sender-level urn
    per node; it is the joint whose one-link conditionals reproduce the DP
    sampling weights (used for self-consistency checks only).
    """
    edges = np.asarray(edges)
    m = node_count
    beta, alpha = hp.beta, hp.alpha

    if hp.prior == DIRICHLET:
        kcomp = hp.n_components
        n_send, k_recv = ssnlda_count_tables(assignments, edges, m, kcomp)
        send_tot = n_send.sum(axis=1)
        recv_tot = k_recv.sum(axis=1)
        log_p = m * (gammaln(kcomp * alpha) - kcomp * gammaln(alpha))
        log_p += gammaln(n_send + alpha).sum() - gammaln(send_tot + kcomp * alpha).sum()
        log_p += kcomp * (gammaln(m * beta) - m * gammaln(beta))
        log_p += gammaln(k_recv + beta).sum() - gammaln(recv_tot + m * beta).sum()
        return float(log_p)

    blocks = _as_blocks(assignments)
    n_blocks = (max(blocks) + 1) if blocks else 0
    n_send, k_recv = ssnlda_count_tables(blocks, edges, m, n_blocks)
    send_tot = n_send.sum(axis=1)
    recv_tot = k_recv.sum(axis=1)
    log_p = n_blocks * (gammaln(m * beta) - m * gammaln(beta))
    log_p += gammaln(k_recv + beta).sum() - gammaln(recv_tot + m * beta).sum()
    for i in range(m):
        if send_tot[i] == 0:
            continue
        row = n_send[i][n_send[i] > 0]
        log_p += len(row) * math.log(alpha) + gammaln(alpha) - gammaln(alpha + send_tot[i])
        log_p += gammaln(row).sum()
    return float(log_p)


def log_joint(assignments, edges, node_count, hp: Hyperparameters) -> float:
    if hp.model == ICMC:
        return icmc_log_joint(assignments, edges, node_count, hp)
    return ssnlda_log_joint(assignments, edges, node_count, hp)


# ---------------------------------------------------------------------------
# sequential chain-rule evaluation (independent route to the same joint)
# ---------------------------------------------------------------------------


def sequential_log_prob(assignments, edges, node_count, hp: Hyperparameters) -> float:
    """log p(links, assignments) as a product of one-link urn predictives.

    Processes the links in the given order, multiplying the full conditional
    of each link (constants included) given everything before it.  By
    exchangeability this must equal the closed-form joint; the two routes
    share no code.
    """
    edges = np.asarray(edges)
    m = node_count
    beta, alpha = hp.beta, hp.alpha
    log_p = 0.0

    if hp.model == ICMC:
        blocks = _as_blocks(assignments) if hp.prior == DP else tuple(assignments)
        kcomp = (max(blocks) + 1 if blocks else 0) if hp.prior == DP else hp.n_components
        n = np.zeros(kcomp + 1, dtype=np.int64)
        k = np.zeros((kcomp + 1, m), dtype=np.int64)
        for t, ((i, j), c) in enumerate(zip(edges, blocks)):
            num = (k[c, i] + beta) * ((k[c, i] + 1 + beta) if i == j else (k[c, j] + beta))
            den = (2 * n[c] + 1 + m * beta) * (2 * n[c] + m * beta)
            if hp.prior == DIRICHLET:
                mix = (n[c] + alpha) / (t + kcomp * alpha)
            else:
                mix = chooser(int(n[c]), alpha) / (t + alpha)
            log_p += math.log(num * mix / den)
            n[c] += 1
            k[c, i] += 1
            k[c, j] += 1
        return log_p

    blocks = _as_blocks(assignments) if hp.prior == DP else tuple(assignments)
    kcomp = (max(blocks) + 1 if blocks else 0) if hp.prior == DP else hp.n_components
    n_send = np.zeros((m, kcomp + 1), dtype=np.int64)
    send_tot = np.zeros(m, dtype=np.int64)
    k_recv = np.zeros((kcomp + 1, m), dtype=np.int64)
    recv_tot = np.zeros(kcomp + 1, dtype=np.int64)
    for (i, j), c in zip(edges, blocks):
        receiver = (k_recv[c, j] + beta) / (recv_tot[c] + m * beta)
        if hp.prior == DIRICHLET:
            sender = (n_send[i, c] + alpha) / (send_tot[i] + kcomp * alpha)
        else:
            sender = chooser(int(n_send[i, c]), alpha) / (send_tot[i] + alpha)
        log_p += math.log(receiver * sender)
        n_send[i, c] += 1
        send_tot[i] += 1
        k_recv[c, j] += 1
        recv_tot[c] += 1
    return log_p


# ---------------------------------------------------------------------------
# conditionals: joint-ratio route and kernel route
# ---------------------------------------------------------------------------


def _dp_candidates(others):
    """Occupied blocks among the other links, in first-appearance order."""
    seen = []
    for c in others:
        if c not in seen:
            seen.append(c)
    return seen


def conditional_from_joint(assignments, link, edges, node_count, hp) -> np.ndarray:
    """p(z_link = c | all other assignments) by evaluating full joints.

    For the Dirichlet prior the candidates are the K labeled components;
    for the DP prior they are the occupied blocks of the remaining links
    plus one fresh block, in that order.
    """
    assignments = list(assignments)
    if hp.prior == DIRICHLET:
        candidates = list(range(hp.n_components))
    else:
        others = assignments[:link] + assignments[link + 1 :]
        occupied = _dp_candidates(others)
        fresh = max(assignments + occupied) + 1
        candidates = occupied + [fresh]
    logs = np.empty(len(candidates))
    for idx, c in enumerate(candidates):
        trial = assignments.copy()
        trial[link] = c
        logs[idx] = log_joint(trial, edges, node_count, hp)
    logs -= logs.max()
    p = np.exp(logs)
    return p / p.sum()


def conditional_from_kernel(assignments, link, edges, node_count, hp) -> np.ndarray:
    """Same conditional via the incremental-count weight formulas."""
    edges = np.asarray(edges)
    others_idx = [t for t in range(len(edges)) if t != link]
    others = [assignments[t] for t in others_idx]
    i, j = int(edges[link][0]), int(edges[link][1])

    if hp.model == ICMC:
        if hp.prior == DIRICHLET:
            candidates = list(range(hp.n_components))
            n, k = icmc_count_tables(others, edges[others_idx], node_count, hp.n_components)
            weights = [
                icmc_weight(k[c, i], k[c, j], n[c], hp, node_count, self_link=i == j)
                for c in candidates
            ]
        else:
            occupied = _dp_candidates(others)
            remap = {c: b for b, c in enumerate(occupied)}
            n, k = icmc_count_tables(
                [remap[c] for c in others], edges[others_idx], node_count, len(occupied)
            )
            weights = [
                icmc_weight(k[b, i], k[b, j], n[b], hp, node_count, self_link=i == j)
                for b in range(len(occupied))
            ]
            weights.append(icmc_weight(0, 0, 0, hp, node_count, self_link=i == j))
    else:
        if hp.prior == DIRICHLET:
            candidates = list(range(hp.n_components))
            n_send, k_recv = ssnlda_count_tables(
                others, edges[others_idx], node_count, hp.n_components
            )
            weights = [
                ssnlda_weight(
                    k_recv[c, j], k_recv[c].sum(), n_send[i, c], n_send[i].sum(), hp, node_count
                )
                for c in candidates
            ]
        else:
            occupied = _dp_candidates(others)
            remap = {c: b for b, c in enumerate(occupied)}
            n_send, k_recv = ssnlda_count_tables(
                [remap[c] for c in others], edges[others_idx], node_count, len(occupied)
            )
            weights = [
                ssnlda_weight(
                    k_recv[b, j], k_recv[b].sum(), n_send[i, b], n_send[i].sum(), hp, node_count
                )
                for b in range(len(occupied))
            ]
            weights.append(ssnlda_weight(0, 0, 0, int(n_send[i].sum()), hp, node_count))

    w = np.asarray(weights, dtype=np.float64)
    return w / w.sum()


# ---------------------------------------------------------------------------
# full posterior enumeration
# ---------------------------------------------------------------------------


def _restricted_growth_strings(length):
    """All set partitions of range(length), as canonical label tuples."""

    def rec(prefix, max_label):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for c in range(max_label + 2):
            prefix.append(c)
            yield from rec(prefix, max(max_label, c))
            prefix.pop()

    if length == 0:
        yield ()
        return
    yield from rec([], -1)


def enumerate_posterior(edges, node_count, hp: Hyperparameters) -> dict:
    """Normalized posterior over assignments (Dirichlet) or partitions (DP).

    Keys are assignment tuples; under the DP prior they are canonical
    partition labels.  Raises if the state space exceeds the enumeration
    budget.
    """
    n_links = len(edges)
    if hp.prior == DIRICHLET:
        if hp.n_components**n_links > ENUMERATION_BUDGET:
            raise EnumerationBudgetError(
                f"{hp.n_components}^{n_links} assignments exceed the budget"
            )
        states = itertools.product(range(hp.n_components), repeat=n_links)
    else:
        if math.comb(2 * n_links, n_links) > ENUMERATION_BUDGET:  # loose Bell bound
            raise EnumerationBudgetError(f"too many partitions of {n_links} links")
        states = _restricted_growth_strings(n_links)

    keys = []
    logs = []
    for state in states:
        keys.append(tuple(state))
        logs.append(log_joint(state, edges, node_count, hp))
    logs = np.array(logs)
    logs -= logs.max()
    p = np.exp(logs)
    p /= p.sum()
    return dict(zip(keys, p))


def total_variation(p: dict, q: dict) -> float:
    """TV distance between two distributions given as dicts."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
