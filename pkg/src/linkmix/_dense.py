"""Dense-array Gibbs kernels for the finite Dirichlet prior.

The inner loops are JIT-compiled and scan a flat weight array over all K
components per link, which is the fast path for the small component counts
the Dirichlet prior is used with.  Counts live in dense arrays indexed
[node, component] so the per-link scan is contiguous.

All randomness comes in through a caller-supplied array of uniforms, one per
link, so the draws are reproducible and independent of the JIT runtime.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def icmc_init(src, dst, order, k, n, z, alpha, beta, m, uniforms):
    """Populate empty urns by one sequential pass in the given order."""
    kcomp = n.shape[0]
    w = np.empty(kcomp)
    mb = m * beta
    for t in range(order.shape[0]):
        l = order[t]
        i = src[l]
        j = dst[l]
        total = 0.0
        for c in range(kcomp):
            ki = k[i, c]
            if i == j:
                num = (ki + beta) * (ki + 1.0 + beta)
            else:
                num = (ki + beta) * (k[j, c] + beta)
            den = (2.0 * n[c] + 1.0 + mb) * (2.0 * n[c] + mb)
            w[c] = num * (n[c] + alpha) / den
            total += w[c]
        u = uniforms[t] * total
        c_new = kcomp - 1
        acc = 0.0
        for c in range(kcomp):
            acc += w[c]
            if u < acc:
                c_new = c
                break
        z[l] = c_new
        n[c_new] += 1
        k[i, c_new] += 1
        k[j, c_new] += 1


@njit(cache=True)
def icmc_sweep(src, dst, order, k, n, z, alpha, beta, m, uniforms):
    """One full Gibbs sweep; returns the sum of log drawn probabilities."""
    kcomp = n.shape[0]
    w = np.empty(kcomp)
    mb = m * beta
    log_score = 0.0
    for t in range(order.shape[0]):
        l = order[t]
        i = src[l]
        j = dst[l]
        c_old = z[l]
        n[c_old] -= 1
        k[i, c_old] -= 1
        k[j, c_old] -= 1
        if n[c_old] < 0 or k[i, c_old] < 0 or k[j, c_old] < 0:
            raise ValueError("count underflow: sampler state is corrupted")
        total = 0.0
        for c in range(kcomp):
            ki = k[i, c]
            if i == j:
                num = (ki + beta) * (ki + 1.0 + beta)
            else:
                num = (ki + beta) * (k[j, c] + beta)
            den = (2.0 * n[c] + 1.0 + mb) * (2.0 * n[c] + mb)
            w[c] = num * (n[c] + alpha) / den
            total += w[c]
        u = uniforms[t] * total
        c_new = kcomp - 1
        acc = 0.0
        for c in range(kcomp):
            acc += w[c]
            if u < acc:
                c_new = c
                break
        z[l] = c_new
        n[c_new] += 1
        k[i, c_new] += 1
        k[j, c_new] += 1
        log_score += np.log(w[c_new] / total)
    return log_score


@njit(cache=True)
def ssnlda_init(src, dst, order, n_send, k_recv, k_tot, z, alpha, beta, m, uniforms):
    """Sequential populating pass for the directed per-sender model.

    The sender-side denominator is constant across components and omitted.
    """
    kcomp = k_tot.shape[0]
    w = np.empty(kcomp)
    mb = m * beta
    for t in range(order.shape[0]):
        l = order[t]
        i = src[l]
        j = dst[l]
        total = 0.0
        for c in range(kcomp):
            w[c] = (k_recv[j, c] + beta) / (k_tot[c] + mb) * (n_send[i, c] + alpha)
            total += w[c]
        u = uniforms[t] * total
        c_new = kcomp - 1
        acc = 0.0
        for c in range(kcomp):
            acc += w[c]
            if u < acc:
                c_new = c
                break
        z[l] = c_new
        n_send[i, c_new] += 1
        k_recv[j, c_new] += 1
        k_tot[c_new] += 1


@njit(cache=True)
def ssnlda_sweep(src, dst, order, n_send, k_recv, k_tot, z, alpha, beta, m, uniforms):
    """One full Gibbs sweep over directed links; returns the log score."""
    kcomp = k_tot.shape[0]
    w = np.empty(kcomp)
    mb = m * beta
    log_score = 0.0
    for t in range(order.shape[0]):
        l = order[t]
        i = src[l]
        j = dst[l]
        c_old = z[l]
        n_send[i, c_old] -= 1
        k_recv[j, c_old] -= 1
        k_tot[c_old] -= 1
        if n_send[i, c_old] < 0 or k_recv[j, c_old] < 0 or k_tot[c_old] < 0:
            raise ValueError("count underflow: sampler state is corrupted")
        total = 0.0
        for c in range(kcomp):
            w[c] = (k_recv[j, c] + beta) / (k_tot[c] + mb) * (n_send[i, c] + alpha)
            total += w[c]
        u = uniforms[t] * total
        c_new = kcomp - 1
        acc = 0.0
        for c in range(kcomp):
            acc += w[c]
            if u < acc:
                c_new = c
                break
        z[l] = c_new
        n_send[i, c_new] += 1
        k_recv[j, c_new] += 1
        k_tot[c_new] += 1
        log_score += np.log(w[c_new] / total)
    return log_score
