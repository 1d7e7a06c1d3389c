"""Chain orchestration: engines, sweeps, snapshots, and new-node prediction.

Randomness: every chain owns one ``numpy.random.Generator`` (PCG64) seeded
from ``(seed, chain_index)`` via ``SeedSequence`` spawn keys.  The link
visit order is one fixed permutation drawn at chain start and reused for
the populating pass and every sweep; each pass then consumes exactly one
uniform per link.  Weight normalization always scans components in
ascending id order.  Together this makes runs bit-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import _dense
from ._sparse import FRESH, IcmcDpEngine, SsnldaDpEngine
from .kernels import DIRICHLET, ICMC, Hyperparameters, icmc_weight, ssnlda_weight
from .network import Network

SNAPSHOT_FORMAT = "linkmix-chain-v1"

DEFAULT_SWEEP_BUDGET_COEFF = 25.0
"""Default multiplier for the iteration heuristic below."""


def suggested_iterations(node_count: int, coeff: float = DEFAULT_SWEEP_BUDGET_COEFF) -> int:
    """Heuristic sweep budget, c * log^2(node count).

    Information spreads through the assignment dependency graph roughly
    diffusively, so the needed sweeps grow with the squared path length.
    This is a starting point, not a guarantee; convergence is judged from
    the trace.
    """
    return max(1, int(math.ceil(coeff * math.log(max(node_count, 2)) ** 2)))


@dataclass(frozen=True)
class ChainConfig:
    """Sweep schedule for one chain: total sweeps, burn-in, thinning, seed."""

    iterations: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if not 1 <= self.thinning <= self.iterations - self.burn_in:
            raise ValueError("thinning must satisfy 1 <= thinning <= iterations - burn_in")


@dataclass
class ChainResult:
    """Snapshots and trace of one fitted chain."""

    model: str
    prior: str
    alpha: float
    beta: float
    n_components: int | None
    node_count: int
    seed: int
    chain_index: int
    sweep_indices: np.ndarray
    samples: np.ndarray  # (n_snapshots, n_directed_links) int32
    trace: np.ndarray  # (iterations,) leave-one-out log score per sweep
    iterations: int
    burn_in: int
    thinning: int

    @property
    def hyperparameters(self) -> Hyperparameters:
        return Hyperparameters(
            model=self.model,
            prior=self.prior,
            beta=self.beta,
            alpha=self.alpha,
            n_components=self.n_components,
        )


def directed_links(net: Network, model: str) -> tuple[np.ndarray, np.ndarray]:
    """Link arrays as consumed by the samplers.

    The undirected model takes edges as stored.  The directed model needs
    an orientation; a directed network is used as is, an undirected one
    contributes both orientations of every edge (self-loops once), which is
    the bag-of-neighbors reading of an undirected graph.
    """
    if net.n_edges < 1:
        raise ValueError("network has no links")
    if model == ICMC:
        if net.directed:
            raise ValueError("the undirected model needs an undirected network; symmetrize first")
        return net.edges[:, 0].copy(), net.edges[:, 1].copy()
    if net.directed:
        return net.edges[:, 0].copy(), net.edges[:, 1].copy()
    loops = net.edges[:, 0] == net.edges[:, 1]
    fwd = net.edges
    rev = net.edges[~loops][:, ::-1]
    src = np.concatenate([fwd[:, 0], rev[:, 0]])
    dst = np.concatenate([fwd[:, 1], rev[:, 1]])
    return src, dst


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


class IcmcDenseEngine:
    """Flat-array engine for the undirected model with a Dirichlet prior."""

    def __init__(self, src, dst, node_count, alpha, beta, n_components, order):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.m = int(node_count)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.order = np.asarray(order, dtype=np.int64)
        self.k = np.zeros((self.m, n_components), dtype=np.int64)
        self.n = np.zeros(n_components, dtype=np.int64)
        self.z = np.full(len(self.src), -1, dtype=np.int64)

    def init_sequential(self, uniforms):
        _dense.icmc_init(
            self.src, self.dst, self.order, self.k, self.n, self.z,
            self.alpha, self.beta, self.m, uniforms,
        )

    def sweep(self, uniforms) -> float:
        return _dense.icmc_sweep(
            self.src, self.dst, self.order, self.k, self.n, self.z,
            self.alpha, self.beta, self.m, uniforms,
        )

    def assignments(self) -> np.ndarray:
        return self.z.copy()


class SsnldaDenseEngine:
    """Flat-array engine for the directed model with a Dirichlet prior."""

    def __init__(self, src, dst, node_count, alpha, beta, n_components, order):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.m = int(node_count)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.order = np.asarray(order, dtype=np.int64)
        self.n_send = np.zeros((self.m, n_components), dtype=np.int64)
        self.k_recv = np.zeros((self.m, n_components), dtype=np.int64)
        self.k_tot = np.zeros(n_components, dtype=np.int64)
        self.z = np.full(len(self.src), -1, dtype=np.int64)

    def init_sequential(self, uniforms):
        _dense.ssnlda_init(
            self.src, self.dst, self.order, self.n_send, self.k_recv, self.k_tot,
            self.z, self.alpha, self.beta, self.m, uniforms,
        )

    def sweep(self, uniforms) -> float:
        return _dense.ssnlda_sweep(
            self.src, self.dst, self.order, self.n_send, self.k_recv, self.k_tot,
            self.z, self.alpha, self.beta, self.m, uniforms,
        )

    def assignments(self) -> np.ndarray:
        return self.z.copy()


class ReferenceEngine:
    """Slow, readable engine used to validate the fast ones.

    Calls the scalar kernel functions for every candidate component of
    every link; supports both models and both priors.  Candidate order is
    ascending component id, with the fresh component last under the DP
    prior, and each pass consumes one uniform per link like the fast
    engines.
    """

    def __init__(self, src, dst, node_count, hp: Hyperparameters, order):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.m = int(node_count)
        self.hp = hp
        self.order = np.asarray(order, dtype=np.int64)
        self.z = np.full(len(self.src), -1, dtype=np.int64)
        # dict-of-dict counts work for both priors
        self.k = [dict() for _ in range(self.m)]       # undirected endpoint counts
        self.n: dict[int, int] = {}                    # undirected per-component links
        self.n_send = [dict() for _ in range(self.m)]  # directed sender counts
        self.k_recv = [dict() for _ in range(self.m)]  # directed receiver counts
        self.k_tot: dict[int, int] = {}                # directed per-component links
        self._next_id = 0

    # -- candidate enumeration ------------------------------------------------

    def _candidates(self):
        if self.hp.prior == DIRICHLET:
            return list(range(self.hp.n_components)), None
        occupied = sorted(self.n if self.hp.model == ICMC else self.k_tot)
        fresh = 0
        while fresh in occupied:
            fresh += 1
        return occupied + [fresh], fresh

    def _weights(self, i, j):
        cands, fresh = self._candidates()
        out = []
        for c in cands:
            if self.hp.model == ICMC:
                out.append(
                    icmc_weight(
                        self.k[i].get(c, 0),
                        self.k[j].get(c, 0),
                        self.n.get(c, 0),
                        self.hp,
                        self.m,
                        self_link=i == j,
                    )
                )
            else:
                n_i_total = sum(self.n_send[i].values())
                out.append(
                    ssnlda_weight(
                        self.k_recv[j].get(c, 0),
                        self.k_tot.get(c, 0),
                        self.n_send[i].get(c, 0),
                        n_i_total,
                        self.hp,
                        self.m,
                    )
                )
        return cands, out

    # -- count updates ----------------------------------------------------------

    @staticmethod
    def _bump(row: dict, c, delta):
        new = row.get(c, 0) + delta
        if new < 0:
            raise ValueError("count underflow: sampler state is corrupted")
        if new == 0:
            row.pop(c, None)
        else:
            row[c] = new

    def _apply(self, l, c, sign):
        i, j = int(self.src[l]), int(self.dst[l])
        if self.hp.model == ICMC:
            self._bump(self.k[i], c, (2 if i == j else 1) * sign)
            if i != j:
                self._bump(self.k[j], c, sign)
            self._bump(self.n, c, sign)
        else:
            self._bump(self.n_send[i], c, sign)
            self._bump(self.k_recv[j], c, sign)
            self._bump(self.k_tot, c, sign)

    def _assign(self, l, uniform):
        i, j = int(self.src[l]), int(self.dst[l])
        cands, weights = self._weights(i, j)
        total = sum(weights)
        u = uniform * total
        chosen = len(cands) - 1
        acc = 0.0
        for idx, w in enumerate(weights):
            acc += w
            if u < acc:
                chosen = idx
                break
        c = cands[chosen]
        self.z[l] = c
        self._apply(l, c, +1)
        return weights[chosen] / total

    def init_sequential(self, uniforms):
        for t in range(len(self.order)):
            self._assign(int(self.order[t]), uniforms[t])

    def sweep(self, uniforms) -> float:
        log_score = 0.0
        for t in range(len(self.order)):
            l = int(self.order[t])
            self._apply(l, int(self.z[l]), -1)
            log_score += math.log(self._assign(l, uniforms[t]))
        return log_score

    def assignments(self) -> np.ndarray:
        return self.z.copy()


def make_engine(net: Network, hp: Hyperparameters, order, kind: str = "auto"):
    """Build a sampler engine over a network.

    ``kind`` is ``auto`` (dense arrays for the Dirichlet prior, sparse
    hash-map engines for the DP prior) or ``reference``.
    """
    src, dst = directed_links(net, hp.model)
    if kind == "reference":
        return ReferenceEngine(src, dst, net.node_count, hp, order)
    if kind != "auto":
        raise ValueError(f"unknown engine kind {kind!r}")
    if hp.prior == DIRICHLET:
        cls = IcmcDenseEngine if hp.model == ICMC else SsnldaDenseEngine
        return cls(src, dst, net.node_count, hp.alpha, hp.beta, hp.n_components, order)
    cls = IcmcDpEngine if hp.model == ICMC else SsnldaDpEngine
    return cls(src, dst, net.node_count, hp.alpha, hp.beta, order)


# ---------------------------------------------------------------------------
# recount oracle (independent of all engines)
# ---------------------------------------------------------------------------


def recount_tables(src, dst, assignments, node_count, model):
    """Recompute all count tables from scratch from the assignment vector.

    Returns dictionaries holding only nonzero entries, the common exchange
    format for consistency checks against any engine's ``count_tables``.
    """
    if model == ICMC:
        n: dict[int, int] = {}
        k = [dict() for _ in range(node_count)]
        for i, j, c in zip(src, dst, assignments):
            i, j, c = int(i), int(j), int(c)
            n[c] = n.get(c, 0) + 1
            k[i][c] = k[i].get(c, 0) + 1
            k[j][c] = k[j].get(c, 0) + 1
        return {"n": n, "k": k}
    n_send = [dict() for _ in range(node_count)]
    k_recv = [dict() for _ in range(node_count)]
    k_tot: dict[int, int] = {}
    for i, j, c in zip(src, dst, assignments):
        i, j, c = int(i), int(j), int(c)
        n_send[i][c] = n_send[i].get(c, 0) + 1
        k_recv[j][c] = k_recv[j].get(c, 0) + 1
        k_tot[c] = k_tot.get(c, 0) + 1
    return {"n_send": n_send, "k_recv": k_recv, "k_tot": k_tot}


def engine_count_tables(engine):
    """Engine counts in the recount exchange format."""
    if isinstance(engine, (IcmcDenseEngine,)):
        n = {c: int(v) for c, v in enumerate(engine.n) if v}
        k = [{c: int(v) for c, v in enumerate(row) if v} for row in engine.k]
        return {"n": n, "k": k}
    if isinstance(engine, (SsnldaDenseEngine,)):
        return {
            "n_send": [{c: int(v) for c, v in enumerate(row) if v} for row in engine.n_send],
            "k_recv": [{c: int(v) for c, v in enumerate(row) if v} for row in engine.k_recv],
            "k_tot": {c: int(v) for c, v in enumerate(engine.k_tot) if v},
        }
    if isinstance(engine, IcmcDpEngine):
        return {"n": dict(engine.n), "k": [dict(row) for row in engine.k]}
    if isinstance(engine, SsnldaDpEngine):
        return {
            "n_send": [dict(row) for row in engine.n_send],
            "k_recv": [dict(row) for row in engine.k_recv],
            "k_tot": dict(engine.k_tot),
        }
    if isinstance(engine, ReferenceEngine):
        if engine.hp.model == ICMC:
            return {"n": dict(engine.n), "k": [dict(row) for row in engine.k]}
        return {
            "n_send": [dict(row) for row in engine.n_send],
            "k_recv": [dict(row) for row in engine.k_recv],
            "k_tot": dict(engine.k_tot),
        }
    raise TypeError(f"unknown engine {type(engine)!r}")


def verify_engine_counts(engine, model: str) -> None:
    """Raise if the engine's tables differ from a full recount."""
    tables = engine_count_tables(engine)
    fresh = recount_tables(engine.src, engine.dst, engine.assignments(), engine.m, model)
    if tables != fresh:
        raise AssertionError("engine count tables diverge from a full recount")
    if model == ICMC:
        per_comp: dict[int, int] = {}
        for row in fresh["k"]:
            for c, v in row.items():
                per_comp[c] = per_comp.get(c, 0) + v
        for c, links in fresh["n"].items():
            if per_comp.get(c, 0) != 2 * links:
                raise AssertionError("endpoint counts are not twice the link counts")


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


def _chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_index,)))


def run_chain(
    net: Network,
    hp: Hyperparameters,
    cfg: ChainConfig,
    chain_index: int = 0,
    engine: str = "auto",
) -> ChainResult:
    """Initialize sequentially, sweep, and record thinned snapshots.

    Deterministic given ``(cfg.seed, chain_index)``.  Snapshots are taken
    after ``burn_in`` at every ``thinning``-th sweep; the trace holds the
    per-sweep sum of log probabilities of the drawn assignments.
    """
    rng = _chain_rng(cfg.seed, chain_index)
    src, dst = directed_links(net, hp.model)
    n_links = len(src)
    order = rng.permutation(n_links)
    eng = make_engine(net, hp, order, engine)
    eng.init_sequential(rng.random(n_links))

    trace = np.empty(cfg.iterations, dtype=np.float64)
    samples = []
    sweep_indices = []
    for s in range(1, cfg.iterations + 1):
        trace[s - 1] = eng.sweep(rng.random(n_links))
        if s > cfg.burn_in and (s - cfg.burn_in) % cfg.thinning == 0:
            samples.append(eng.assignments().astype(np.int32))
            sweep_indices.append(s)

    return ChainResult(
        model=hp.model,
        prior=hp.prior,
        alpha=hp.alpha,
        beta=hp.beta,
        n_components=hp.n_components,
        node_count=net.node_count,
        seed=cfg.seed,
        chain_index=chain_index,
        sweep_indices=np.asarray(sweep_indices, dtype=np.int64),
        samples=np.vstack(samples) if samples else np.empty((0, n_links), dtype=np.int32),
        trace=trace,
        iterations=cfg.iterations,
        burn_in=cfg.burn_in,
        thinning=cfg.thinning,
    )


def run_chains(
    net: Network,
    hp: Hyperparameters,
    cfg: ChainConfig,
    n_chains: int,
    n_jobs: int = 1,
    engine: str = "auto",
) -> list[ChainResult]:
    """Independent chains with per-chain spawned seeds; order is by index."""
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    if n_jobs == 1:
        return [run_chain(net, hp, cfg, chain_index=i, engine=engine) for i in range(n_chains)]
    return Parallel(n_jobs=n_jobs)(
        delayed(run_chain)(net, hp, cfg, chain_index=i, engine=engine) for i in range(n_chains)
    )


# ---------------------------------------------------------------------------
# snapshot persistence
# ---------------------------------------------------------------------------


def save_chain(result: ChainResult, prefix) -> None:
    """Write ``<prefix>.json`` + ``<prefix>.assignments.npy`` + ``<prefix>.trace.npy``.

    The JSON sidecar holds the model, prior, hyperparameters, seed, chain
    index, sweep schedule and snapshot sweep indices; the ``.npy`` files
    hold the (snapshots x links) int32 assignment matrix and the float64
    trace.  Keys are sorted and arrays written with numpy's stable format,
    so identical runs produce byte-identical files.
    """
    prefix = Path(prefix)
    meta = {
        "format": SNAPSHOT_FORMAT,
        "model": result.model,
        "prior": result.prior,
        "alpha": result.alpha,
        "beta": result.beta,
        "n_components": result.n_components,
        "node_count": result.node_count,
        "seed": result.seed,
        "chain_index": result.chain_index,
        "iterations": result.iterations,
        "burn_in": result.burn_in,
        "thinning": result.thinning,
        "sweep_indices": [int(s) for s in result.sweep_indices],
    }
    prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(prefix.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    np.save(str(prefix) + ".assignments.npy", result.samples.astype(np.int32))
    np.save(str(prefix) + ".trace.npy", result.trace.astype(np.float64))


def load_chain(prefix) -> ChainResult:
    prefix = Path(prefix)
    with open(prefix.with_suffix(".json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"unsupported snapshot format {meta.get('format')!r}")
    samples = np.load(str(prefix) + ".assignments.npy")
    trace = np.load(str(prefix) + ".trace.npy")
    return ChainResult(
        model=meta["model"],
        prior=meta["prior"],
        alpha=meta["alpha"],
        beta=meta["beta"],
        n_components=meta["n_components"],
        node_count=meta["node_count"],
        seed=meta["seed"],
        chain_index=meta["chain_index"],
        sweep_indices=np.asarray(meta["sweep_indices"], dtype=np.int64),
        samples=samples,
        trace=trace,
        iterations=meta["iterations"],
        burn_in=meta["burn_in"],
        thinning=meta["thinning"],
    )


# ---------------------------------------------------------------------------
# prediction for a new node
# ---------------------------------------------------------------------------


def predict_new_node(
    net: Network,
    hp: Hyperparameters,
    assignments,
    new_links,
    refine_sweeps: int = 0,
    n_draws: int = 100,
    seed: int = 0,
) -> tuple[list[int], np.ndarray]:
    """Posterior membership of an unseen node attached by ``new_links``.

    ``assignments`` is one converged snapshot over the network's directed
    links; ``new_links`` lists existing endpoints the new node connects to
    (as link targets for the directed model).  Each draw assigns the new
    links sequentially from the left-out-link conditionals computed against
    the fitted counts plus the new links' own contributions -- old
    assignments are never touched -- optionally followed by
    ``refine_sweeps`` extra Gibbs passes over the new links only.  The
    returned membership is the across-draw average of the new node's count
    shares.

    Returns ``(component_ids, probabilities)``; under the DP prior the ids
    are the snapshot's occupied components plus a final ``-1`` bucket that
    aggregates components newly opened during prediction.
    """
    if len(new_links) == 0:
        raise ValueError("new_links must not be empty")
    new_links = [int(e) for e in new_links]
    for e in new_links:
        if not 0 <= e < net.node_count:
            raise ValueError(f"unknown existing node index {e}")

    src, dst = directed_links(net, hp.model)
    assignments = np.asarray(assignments, dtype=np.int64)
    if len(assignments) != len(src):
        raise ValueError("assignment vector does not match the network's link count")
    base = recount_tables(src, dst, assignments, net.node_count, hp.model)
    rng = np.random.default_rng(seed)
    m = net.node_count

    if hp.prior == DIRICHLET:
        ids = list(range(hp.n_components))
    else:
        occupied = sorted(base["n"] if hp.model == ICMC else base["k_tot"])
        ids = occupied + [FRESH]
    mean = np.zeros(len(ids))
    col = {c: idx for idx, c in enumerate(ids)}

    base_n = base["n"] if hp.model == ICMC else base["k_tot"]
    base_k = base["k"] if hp.model == ICMC else base["k_recv"]
    local_fresh_start = max(base_n, default=-1) + 1

    for _ in range(n_draws):
        # per-draw deltas on top of the immutable base counts
        own: dict[int, int] = {}                   # new node's counts per component
        d_node: dict[int, dict[int, int]] = {}     # existing endpoints' extra counts
        d_n: dict[int, int] = {}                   # per-component extra link counts
        link_z: list[int | None] = [None] * len(new_links)

        def weight(c, e):
            k_e = base_k[e].get(c, 0) + d_node.get(e, {}).get(c, 0)
            n_c = base_n.get(c, 0) + d_n.get(c, 0)
            if hp.model == ICMC:
                return icmc_weight(own.get(c, 0), k_e, n_c, hp, m)
            return ssnlda_weight(k_e, n_c, own.get(c, 0), sum(own.values()), hp, m)

        def assign(li):
            e = new_links[li]
            if hp.prior == DIRICHLET:
                cands = list(range(hp.n_components))
            else:
                occ = sorted(
                    c
                    for c in set(base_n) | set(d_n)
                    if base_n.get(c, 0) + d_n.get(c, 0) > 0
                )
                # the fresh id must not collide with a component another new
                # link keeps occupied (possible after refinement rounds)
                fresh = max(occ[-1] + 1 if occ else 0, local_fresh_start)
                cands = occ + [fresh]
            weights = [weight(c, e) for c in cands]
            total = sum(weights)
            u = rng.random() * total
            acc = 0.0
            chosen = len(cands) - 1
            for idx, w in enumerate(weights):
                acc += w
                if u < acc:
                    chosen = idx
                    break
            c = cands[chosen]
            link_z[li] = c
            own[c] = own.get(c, 0) + 1
            d_node.setdefault(e, {})[c] = d_node.setdefault(e, {}).get(c, 0) + 1
            d_n[c] = d_n.get(c, 0) + 1

        def unassign(li):
            c = link_z[li]
            e = new_links[li]
            for table, key in ((own, c), (d_node[e], c), (d_n, c)):
                table[key] -= 1
                if table[key] == 0:
                    del table[key]
            link_z[li] = None

        for li in range(len(new_links)):
            assign(li)
        for _ in range(refine_sweeps):
            for li in range(len(new_links)):
                unassign(li)
                assign(li)

        total_own = sum(own.values())
        for c, v in own.items():
            idx = col.get(c)
            if idx is None:
                idx = col[FRESH]
            mean[idx] += v / total_own

    return ids, mean / n_draws
