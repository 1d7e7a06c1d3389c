"""Sparse-count Gibbs engines for the Dirichlet-process prior.

Counts are kept in per-node hash maps holding only nonzero entries, so
memory scales with the number of links plus occupied components rather than
with nodes x components.

For the undirected bag-of-links model the draw decomposes into
  * a "background" weight per occupied component, valid whenever the two
    endpoints have no mass in it: beta^2 * C(n_c, alpha) / denom(n_c),
    maintained across links in the partial-sum tree;
  * per-link corrections for the components actually touched by either
    endpoint (a set bounded by the endpoint degrees), always nonnegative;
  * one fresh-component weight, a constant.
The draw walks corrections first, then the fresh weight, then descends the
tree, which preserves the exact conditional while doing O(deg_i + deg_j +
log K) work per link.

The directed model's sender urn gives every component the concentration
weight for senders that never used it, so there is no shared background
across components with different receiver totals; that engine scans the
occupied components instead (fast enough in practice: the DP keeps the
occupied count far below the link count).

Empty component ids go back to a free list and are reused smallest-first,
which keeps the id space bounded and the runs reproducible.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .tree import PartialSumTree

FRESH = -1


class IcmcDpEngine:
    """Collapsed Gibbs for the undirected model under the DP prior."""

    def __init__(self, src, dst, node_count, alpha, beta, order):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.m = int(node_count)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.order = np.asarray(order, dtype=np.int64)
        self.n_links = len(self.src)

        self.z = np.full(self.n_links, -1, dtype=np.int64)
        self.k = [dict() for _ in range(self.m)]
        self.n: dict[int, int] = {}
        self.tree = PartialSumTree()
        self._free: list[int] = []
        self._next_id = 0

        self._mb = self.m * self.beta
        self._fresh_w = self.beta * self.beta * self.alpha / ((1.0 + self._mb) * self._mb)

    # -- weights ---------------------------------------------------------

    def _background(self, n_c: int) -> float:
        den = (2.0 * n_c + 1.0 + self._mb) * (2.0 * n_c + self._mb)
        return self.beta * self.beta * n_c / den

    def _exact(self, c: int, i: int, j: int) -> float:
        ki = self.k[i].get(c, 0)
        if i == j:
            num = (ki + self.beta) * (ki + 1.0 + self.beta)
        else:
            num = (ki + self.beta) * (self.k[j].get(c, 0) + self.beta)
        n_c = self.n[c]
        den = (2.0 * n_c + 1.0 + self._mb) * (2.0 * n_c + self._mb)
        return num * n_c / den

    # -- count updates -----------------------------------------------------

    def _bump_node(self, node: int, c: int, delta: int) -> None:
        row = self.k[node]
        new = row.get(c, 0) + delta
        if new < 0:
            raise ValueError("count underflow: sampler state is corrupted")
        if new == 0:
            row.pop(c, None)
        else:
            row[c] = new

    def _decrement(self, l: int) -> None:
        c = int(self.z[l])
        i, j = int(self.src[l]), int(self.dst[l])
        self._bump_node(i, c, -2 if i == j else -1)
        if i != j:
            self._bump_node(j, c, -1)
        left = self.n[c] - 1
        if left < 0:
            raise ValueError("count underflow: sampler state is corrupted")
        if left == 0:
            del self.n[c]
            self.tree.update(c, 0.0)
            heapq.heappush(self._free, c)
        else:
            self.n[c] = left
            self.tree.update(c, self._background(left))

    def _increment(self, l: int, c: int) -> None:
        i, j = int(self.src[l]), int(self.dst[l])
        self.z[l] = c
        self._bump_node(i, c, 2 if i == j else 1)
        if i != j:
            self._bump_node(j, c, 1)
        self.n[c] = self.n.get(c, 0) + 1
        self.tree.update(c, self._background(self.n[c]))

    def _alloc(self) -> int:
        if self._free:
            return heapq.heappop(self._free)
        c = self._next_id
        self._next_id += 1
        return c

    # -- the draw ----------------------------------------------------------

    def _draw(self, i: int, j: int, u01: float):
        """Pick a component for a left-out link at endpoints (i, j).

        Returns ``(component, probability)`` where component is ``FRESH``
        for a new one.  Deterministic given ``u01``.

        A self-loop's untouched-component weight is beta*(1+beta)*C/den
        instead of the beta^2*C/den held in the tree -- the same constant
        ratio for every untouched component and for the fresh one -- so the
        background segments are rescaled by that ratio instead of rebuilt.
        """
        scale = (1.0 + self.beta) / self.beta if i == j else 1.0
        touched = set(self.k[i])
        touched.update(self.k[j])
        touched = sorted(touched)
        corr = []
        corr_sum = 0.0
        for c in touched:
            # the tree stores _background(n_c) for this exact n_c, so the
            # recomputation matches the stored weight bit for bit
            d = self._exact(c, i, j) - scale * self._background(self.n[c])
            corr.append(d)
            corr_sum += d
        total = corr_sum + scale * (self._fresh_w + self.tree.total)
        u = u01 * total
        if u < corr_sum:
            chosen = touched[-1]
            for c, d in zip(touched, corr):
                u -= d
                if u < 0.0:
                    chosen = c
                    break
            return chosen, self._exact(chosen, i, j) / total
        u = (u - corr_sum) / scale
        if u < self._fresh_w or len(self.tree) == 0:
            return FRESH, scale * self._fresh_w / total
        chosen = self.tree.sample(min(u - self._fresh_w, np.nextafter(self.tree.total, 0.0)))
        return chosen, self._exact(chosen, i, j) / total

    # -- passes --------------------------------------------------------------

    def init_sequential(self, uniforms) -> None:
        for t in range(self.n_links):
            l = int(self.order[t])
            c, _ = self._draw(int(self.src[l]), int(self.dst[l]), uniforms[t])
            if c == FRESH:
                c = self._alloc()
            self._increment(l, c)

    def set_assignments(self, assignments) -> None:
        """Warm-start: rebuild all tables from a full assignment vector."""
        assignments = np.asarray(assignments, dtype=np.int64)
        if assignments.shape != (self.n_links,) or assignments.min() < 0:
            raise ValueError("need one nonnegative component id per link")
        self.k = [dict() for _ in range(self.m)]
        self.n = {}
        self.tree = PartialSumTree()
        self._free = []
        self.z = np.full(self.n_links, -1, dtype=np.int64)
        self._next_id = int(assignments.max()) + 1
        for l, c in enumerate(assignments):
            self._increment(l, int(c))

    def sweep(self, uniforms) -> float:
        log_score = 0.0
        for t in range(self.n_links):
            l = int(self.order[t])
            self._decrement(l)
            c, p = self._draw(int(self.src[l]), int(self.dst[l]), uniforms[t])
            if c == FRESH:
                c = self._alloc()
            self._increment(l, c)
            log_score += math.log(p)
        return log_score

    # -- inspection ------------------------------------------------------------

    def assignments(self) -> np.ndarray:
        return self.z.copy()

    def occupied(self) -> list[int]:
        return sorted(self.n)

    def conditional_probs(self, l: int):
        """Exact conditional of link ``l`` given the rest of the state.

        Removes the link, computes the probabilities the engine's draw
        decomposition assigns to every candidate, then restores the state.
        Candidate order is occupied components ascending, fresh last.
        """
        old = int(self.z[l])
        self._decrement(l)
        i, j = int(self.src[l]), int(self.dst[l])
        scale = (1.0 + self.beta) / self.beta if i == j else 1.0
        comps = sorted(self.n)
        touched = set(self.k[i])
        touched.update(self.k[j])
        corr_sum = sum(
            self._exact(c, i, j) - scale * self._background(self.n[c])
            for c in sorted(touched)
        )
        total = corr_sum + scale * (self._fresh_w + self.tree.total)
        probs = [self._exact(c, i, j) / total for c in comps]
        probs.append(scale * self._fresh_w / total)
        self._increment(l, old)
        return comps + [FRESH], np.asarray(probs)


class SsnldaDpEngine:
    """Collapsed Gibbs for the directed per-sender model under the DP prior."""

    def __init__(self, src, dst, node_count, alpha, beta, order):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.m = int(node_count)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.order = np.asarray(order, dtype=np.int64)
        self.n_links = len(self.src)

        self.z = np.full(self.n_links, -1, dtype=np.int64)
        self.n_send = [dict() for _ in range(self.m)]
        self.k_recv = [dict() for _ in range(self.m)]
        self.k_tot: dict[int, int] = {}
        self._free: list[int] = []
        self._next_id = 0
        self._mb = self.m * self.beta

    def _weight(self, c: int, i: int, j: int) -> float:
        receiver = (self.k_recv[j].get(c, 0) + self.beta) / (self.k_tot[c] + self._mb)
        n_ic = self.n_send[i].get(c, 0)
        return receiver * (n_ic if n_ic else self.alpha)

    def _fresh_weight(self) -> float:
        return self.beta / self._mb * self.alpha

    def _draw(self, i: int, j: int, u01: float):
        comps = sorted(self.k_tot)
        weights = [self._weight(c, i, j) for c in comps]
        fresh = self._fresh_weight()
        total = sum(weights) + fresh
        u = u01 * total
        acc = 0.0
        for c, w in zip(comps, weights):
            acc += w
            if u < acc:
                return c, w / total
        return FRESH, fresh / total

    def _bump(self, row: dict, c: int, delta: int) -> None:
        new = row.get(c, 0) + delta
        if new < 0:
            raise ValueError("count underflow: sampler state is corrupted")
        if new == 0:
            row.pop(c, None)
        else:
            row[c] = new

    def _decrement(self, l: int) -> None:
        c = int(self.z[l])
        i, j = int(self.src[l]), int(self.dst[l])
        self._bump(self.n_send[i], c, -1)
        self._bump(self.k_recv[j], c, -1)
        left = self.k_tot[c] - 1
        if left == 0:
            del self.k_tot[c]
            heapq.heappush(self._free, c)
        else:
            self.k_tot[c] = left

    def _increment(self, l: int, c: int) -> None:
        i, j = int(self.src[l]), int(self.dst[l])
        self.z[l] = c
        self._bump(self.n_send[i], c, 1)
        self._bump(self.k_recv[j], c, 1)
        self.k_tot[c] = self.k_tot.get(c, 0) + 1

    def _alloc(self) -> int:
        if self._free:
            return heapq.heappop(self._free)
        c = self._next_id
        self._next_id += 1
        return c

    def init_sequential(self, uniforms) -> None:
        for t in range(self.n_links):
            l = int(self.order[t])
            c, _ = self._draw(int(self.src[l]), int(self.dst[l]), uniforms[t])
            if c == FRESH:
                c = self._alloc()
            self._increment(l, c)

    def set_assignments(self, assignments) -> None:
        """Warm-start: rebuild all tables from a full assignment vector."""
        assignments = np.asarray(assignments, dtype=np.int64)
        if assignments.shape != (self.n_links,) or assignments.min() < 0:
            raise ValueError("need one nonnegative component id per link")
        self.n_send = [dict() for _ in range(self.m)]
        self.k_recv = [dict() for _ in range(self.m)]
        self.k_tot = {}
        self._free = []
        self.z = np.full(self.n_links, -1, dtype=np.int64)
        self._next_id = int(assignments.max()) + 1
        for l, c in enumerate(assignments):
            self._increment(l, int(c))

    def sweep(self, uniforms) -> float:
        log_score = 0.0
        for t in range(self.n_links):
            l = int(self.order[t])
            self._decrement(l)
            c, p = self._draw(int(self.src[l]), int(self.dst[l]), uniforms[t])
            if c == FRESH:
                c = self._alloc()
            self._increment(l, c)
            log_score += math.log(p)
        return log_score

    def assignments(self) -> np.ndarray:
        return self.z.copy()

    def occupied(self) -> list[int]:
        return sorted(self.k_tot)

    def conditional_probs(self, l: int):
        old = int(self.z[l])
        self._decrement(l)
        i, j = int(self.src[l]), int(self.dst[l])
        comps = sorted(self.k_tot)
        weights = [self._weight(c, i, j) for c in comps]
        fresh = self._fresh_weight()
        total = sum(weights) + fresh
        probs = np.asarray(weights + [fresh]) / total
        self._increment(l, old)
        return comps + [FRESH], probs
