"""Command-line front end: fit, evaluate, predict, oracle-check, fetch-data.

Runs are driven by flags or a JSON config file whose keys mirror the flag
names (flags win).  ``fit`` writes per-chain snapshot files, per-chain
trace CSVs, and a manifest that suffices to re-run the fit; pointing
``--config`` at a manifest replays it.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import (
    aggregate_chains,
    confusion,
    ground_truth_perplexity,
    hard_partition,
    memberships_from_samples,
    modularity,
)
from .kernels import DIRICHLET, DP, ICMC, SSNLDA, Hyperparameters
from .network import (
    GroundTruth,
    Network,
    extract_giant_component,
    filter_ground_truth,
    load_edge_list,
    load_labels,
    symmetrize,
)
from .sampler import (
    ChainConfig,
    load_chain,
    predict_new_node,
    run_chains,
    save_chain,
    suggested_iterations,
)

DEFAULTS = {
    "model": ICMC,
    "prior": DIRICHLET,
    "k": None,
    "alpha": None,
    "beta": None,
    "iterations": None,  # default: the log^2(node count) heuristic
    "burn_in": None,
    "thin": None,
    "chains": 1,
    "seed": 0,
    "directed": False,
    "symmetrize": False,
    "giant_component": False,
    "jobs": 1,
    "role": "sender",
}


class CliError(RuntimeError):
    pass


def _merge_config(args: argparse.Namespace, keys) -> dict:
    """Layer resolved settings: defaults < config file < explicit flags."""
    merged = {k: DEFAULTS.get(k) for k in keys}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # accept a manifest as a config
        unknown = set(loaded) - set(keys)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _resolve_hyperparameters(cfg: dict) -> Hyperparameters:
    if cfg["model"] not in (ICMC, SSNLDA):
        raise CliError(f"--model must be icmc or ssnlda, got {cfg['model']!r}")
    if cfg["prior"] not in (DIRICHLET, DP):
        raise CliError(f"--prior must be dirichlet or dp, got {cfg['prior']!r}")
    if cfg["prior"] == DIRICHLET:
        if not cfg["k"]:
            raise CliError("--k is required with the Dirichlet prior")
        alpha = cfg["alpha"] if cfg["alpha"] is not None else 1.0 / cfg["k"]
        beta = cfg["beta"] if cfg["beta"] is not None else 0.01
        n_components = int(cfg["k"])
    else:
        if cfg["k"]:
            raise CliError("--k cannot be used with the DP prior")
        alpha = cfg["alpha"] if cfg["alpha"] is not None else 0.3
        beta = cfg["beta"] if cfg["beta"] is not None else 0.3
        n_components = None
    return Hyperparameters(
        model=cfg["model"], prior=cfg["prior"], beta=float(beta), alpha=float(alpha),
        n_components=n_components,
    )


def _load_network(cfg: dict) -> tuple[Network, GroundTruth | None]:
    net = load_edge_list(cfg["edges"], directed=bool(cfg["directed"]))
    truth = load_labels(cfg["labels"], net) if cfg.get("labels") else None
    if cfg["model"] == ICMC and net.directed and not cfg["symmetrize"]:
        print("note: undirected model on directed input; symmetrizing", file=sys.stderr)
        net = symmetrize(net)
    elif cfg["symmetrize"]:
        net = symmetrize(net)
    if cfg["giant_component"]:
        net, mapping = extract_giant_component(net)
        if truth is not None:
            truth = filter_ground_truth(truth, mapping)
    return net, truth


def _chain_prefixes(out_dir: Path):
    return sorted(p.with_suffix("") for p in out_dir.glob("chain_*.json"))


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    keys = [
        "edges", "labels", "model", "prior", "k", "alpha", "beta", "iterations",
        "burn_in", "thin", "chains", "seed", "directed", "symmetrize",
        "giant_component", "jobs", "out",
    ]
    cfg = _merge_config(args, keys)
    if not cfg.get("edges"):
        raise CliError("--edges is required")
    if not cfg.get("out"):
        raise CliError("--out is required")
    hp = _resolve_hyperparameters(cfg)
    net, _ = _load_network(cfg)
    if cfg["iterations"] is None:
        iterations = suggested_iterations(net.node_count)
        print(f"note: --iterations omitted; using {iterations} "
              f"(log^2 of the node count heuristic)", file=sys.stderr)
    else:
        iterations = int(cfg["iterations"])
    if iterations < 1:
        raise CliError("--iterations must be >= 1")
    burn_in = iterations // 2 if cfg["burn_in"] is None else int(cfg["burn_in"])
    thin = (
        max(1, (iterations - burn_in) // 100) if cfg["thin"] is None else int(cfg["thin"])
    )
    chain_cfg = ChainConfig(
        iterations=iterations, burn_in=burn_in, thinning=thin, seed=int(cfg["seed"])
    )
    cfg.update(iterations=iterations, burn_in=burn_in, thin=thin, alpha=hp.alpha,
               beta=hp.beta)
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    results = run_chains(
        net, hp, chain_cfg, n_chains=int(cfg["chains"]), n_jobs=int(cfg["jobs"])
    )
    elapsed = time.perf_counter() - t0

    outputs = []
    for res in results:
        prefix = out_dir / f"chain_{res.chain_index:03d}"
        save_chain(res, prefix)
        trace_csv = out_dir / f"chain_{res.chain_index:03d}_trace.csv"
        with open(trace_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sweep", "loo_log_score"])
            for s, v in enumerate(res.trace, start=1):
                writer.writerow([s, repr(float(v))])
        outputs += [
            f"{prefix.name}.json",
            f"{prefix.name}.assignments.npy",
            f"{prefix.name}.trace.npy",
            trace_csv.name,
        ]

    manifest = {
        "tool": {"name": "linkmix", "version": __version__},
        "config": {k: cfg.get(k) for k in keys},
        "network": {"node_count": net.node_count, "n_edges": net.n_edges},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timings": {"total_seconds": elapsed, "chains": len(results)},
        "outputs": outputs,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"fit: {len(results)} chain(s), {iterations} sweeps -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def cmd_evaluate(args) -> int:
    keys = [
        "edges", "labels", "model", "directed", "symmetrize", "giant_component",
        "snapshots", "out", "role",
    ]
    cfg = _merge_config(args, keys)
    for req in ("edges", "snapshots", "out"):
        if not cfg.get(req):
            raise CliError(f"--{req.replace('_', '-')} is required")

    prefixes = _chain_prefixes(Path(cfg["snapshots"]))
    if not prefixes:
        raise CliError(f"no chain_*.json snapshots under {cfg['snapshots']}")
    chains = [load_chain(p) for p in prefixes]
    cfg["model"] = chains[0].model

    net, truth = _load_network(cfg)
    if net.node_count != chains[0].node_count:
        raise CliError(
            f"network has {net.node_count} nodes but snapshots expect "
            f"{chains[0].node_count}; check preprocessing flags"
        )
    if truth is None and cfg.get("labels"):
        truth = None
    if truth is None:
        print("warning: no labels given; emitting modularity only", file=sys.stderr)

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    role = cfg.get("role") or "sender"

    per_chain = [memberships_from_samples(c, net, role=role) for c in chains]
    tails = [max(1, len(c.trace) // 10) for c in chains]
    scores = [float(c.trace[-t:].mean()) for c, t in zip(chains, tails)]
    best = int(np.argmax(scores))
    ids, memberships = per_chain[best]

    with open(out_dir / "memberships.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "component", "probability"])
        for node in range(net.node_count):
            for idx, comp in enumerate(ids):
                writer.writerow([net.name_of(node), int(comp), repr(float(memberships[node, idx]))])

    mods = []
    for chain, (_, p) in zip(chains, per_chain):
        if chain.model == ICMC or not net.directed:
            mods.append(modularity(net, hard_partition(p)))
    scores_doc: dict = {
        "model": chains[0].model,
        "n_chains": len(chains),
        "best_chain": chains[best].chain_index,
        "mean_trace_tail": scores,
    }
    if mods:
        if len(mods) >= 2:
            mean, ci = aggregate_chains(mods)
            scores_doc["modularity"] = {"mean": mean, "ci95": list(ci), "per_chain": mods}
        else:
            scores_doc["modularity"] = {"mean": mods[0], "per_chain": mods}

    if truth is not None:
        conf = confusion(memberships, truth)
        with open(out_dir / "confusion.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true_class"] + [f"component_{int(c)}" for c in ids])
            for c, row in enumerate(conf):
                writer.writerow([truth.class_names[c]] + [repr(float(v)) for v in row])
        perplexities = [
            ground_truth_perplexity(confusion(p, truth)) for _, p in per_chain
        ]
        if len(perplexities) >= 2:
            mean, ci = aggregate_chains(perplexities)
            scores_doc["perplexity"] = {
                "mean": mean, "ci95": list(ci), "per_chain": perplexities,
            }
        else:
            scores_doc["perplexity"] = {
                "mean": perplexities[0], "per_chain": perplexities,
            }
        if not net.directed:
            truth_part = truth.as_array(net.node_count)
            if (truth_part >= 0).all():
                scores_doc["ground_truth_modularity"] = modularity(net, truth_part)

    with open(out_dir / "scores.json", "w", encoding="utf-8") as fh:
        json.dump(scores_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"evaluate: {len(chains)} chain(s) -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def cmd_predict(args) -> int:
    keys = [
        "edges", "model", "directed", "symmetrize", "giant_component",
        "snapshots", "new_edges", "out", "refine_sweeps", "draws", "seed",
    ]
    cfg = _merge_config(args, keys)
    for req in ("edges", "snapshots", "new_edges", "out"):
        if not cfg.get(req):
            raise CliError(f"--{req.replace('_', '-')} is required")

    prefixes = _chain_prefixes(Path(cfg["snapshots"]))
    if not prefixes:
        raise CliError(f"no chain_*.json snapshots under {cfg['snapshots']}")
    chain = load_chain(prefixes[0])
    cfg["model"] = chain.model
    net, _ = _load_network(cfg)
    if net.node_count != chain.node_count:
        raise CliError("network/snapshot node count mismatch; check preprocessing flags")

    lookup = (
        {name: i for i, name in enumerate(net.node_names)}
        if net.node_names is not None
        else {str(i): i for i in range(net.node_count)}
    )
    groups: dict[str, list[int]] = {}
    with open(cfg["new_edges"], "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(("#", "%")):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CliError(f"{cfg['new_edges']}:{lineno}: expected '<new-id> <existing-id>'")
            new_id, existing = parts
            if existing not in lookup:
                raise CliError(
                    f"{cfg['new_edges']}:{lineno}: unknown existing node {existing!r}"
                )
            groups.setdefault(new_id, []).append(lookup[existing])

    if not groups:
        raise CliError(f"{cfg['new_edges']}: no new links found")

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    hp = chain.hyperparameters
    seed = int(cfg.get("seed") or 0)
    with open(out_dir / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["new_node_id", "component", "probability"])
        for new_id, targets in groups.items():
            ids, probs = predict_new_node(
                net,
                hp,
                chain.samples[-1],
                targets,
                refine_sweeps=int(cfg.get("refine_sweeps") or 0),
                n_draws=int(cfg.get("draws") or 100),
                seed=seed,
            )
            for comp, p in zip(ids, probs):
                label = "new" if comp == -1 else str(int(comp))
                writer.writerow([new_id, label, repr(float(p))])
    print(f"predict: {len(groups)} node(s) -> {out_dir / 'predictions.csv'}")
    return 0


# ---------------------------------------------------------------------------
# oracle-check
# ---------------------------------------------------------------------------


def cmd_oracle_check(args) -> int:
    from . import oracle
    from .oracle import conditional_from_joint, conditional_from_kernel

    rng = np.random.default_rng(args.seed)
    tol = args.tolerance
    worst: dict[str, float] = {}
    combos = [
        (ICMC, DIRICHLET),
        (ICMC, DP),
        (SSNLDA, DIRICHLET),
        (SSNLDA, DP),
    ]
    for trial in range(args.instances):
        m = int(rng.integers(2, args.max_nodes + 1))
        n_links = int(rng.integers(1, args.max_links + 1))
        src = rng.integers(0, m, size=n_links)
        dst = rng.integers(0, m, size=n_links)
        model, prior = combos[trial % len(combos)]
        if model == ICMC:
            lo = np.minimum(src, dst)
            hi = np.maximum(src, dst)
            edges = np.column_stack([lo, hi])
        else:
            edges = np.column_stack([src, dst])
        alpha = float(rng.uniform(0.05, 2.0))
        beta = float(rng.uniform(0.05, 2.0))
        if prior == DIRICHLET:
            kcomp = int(rng.integers(1, args.max_components + 1))
            hp = Hyperparameters(model=model, prior=prior, beta=beta, alpha=alpha,
                                 n_components=kcomp)
            assignments = list(rng.integers(0, kcomp, size=n_links))
        else:
            hp = Hyperparameters(model=model, prior=prior, beta=beta, alpha=alpha)
            assignments = list(oracle._as_blocks(rng.integers(0, n_links, size=n_links)))
        link = int(rng.integers(0, n_links))
        via_joint = conditional_from_joint(assignments, link, edges, m, hp)
        via_kernel = conditional_from_kernel(assignments, link, edges, m, hp)
        dev = float(np.abs(via_joint - via_kernel).max())
        key = f"{model}-{prior}"
        worst[key] = max(worst.get(key, 0.0), dev)

    status = 0
    for key in sorted(worst):
        line = f"{key}: max |kernel - joint| = {worst[key]:.3e}"
        if worst[key] > tol:
            line += f"  FAIL (tolerance {tol:g})"
            status = 1
        print(line)

    # finite-prior consistency: with the concentration split over 10^6
    # components, weight ratios between occupied components must match the
    # nonparametric form
    from .kernels import icmc_weight

    limit_dev = 0.0
    for _ in range(50):
        alpha_dp = float(rng.uniform(0.05, 2.0))
        beta = float(rng.uniform(0.05, 2.0))
        m = int(rng.integers(2, 30))
        k_big = 10**6
        hp_dir = Hyperparameters(model=ICMC, prior=DIRICHLET, beta=beta,
                                 alpha=alpha_dp / k_big, n_components=k_big)
        hp_dp = Hyperparameters(model=ICMC, prior=DP, beta=beta, alpha=alpha_dp)
        s1 = tuple(int(v) for v in rng.integers(0, 6, size=2)) + (int(rng.integers(1, 9)),)
        s2 = tuple(int(v) for v in rng.integers(0, 6, size=2)) + (int(rng.integers(1, 9)),)
        r_dir = icmc_weight(*s1, hp_dir, m) / icmc_weight(*s2, hp_dir, m)
        r_dp = icmc_weight(*s1, hp_dp, m) / icmc_weight(*s2, hp_dp, m)
        limit_dev = max(limit_dev, abs(r_dir - r_dp))
    line = f"dirichlet->dp large-K ratio consistency: max deviation = {limit_dev:.3e}"
    if limit_dev > 1e-4:
        line += "  FAIL (tolerance 1e-4)"
        status = 1
    print(line)
    return status


# ---------------------------------------------------------------------------
# fetch-data
# ---------------------------------------------------------------------------


def cmd_fetch_data(args) -> int:
    from .datasets import fetch_datasets

    return fetch_datasets(Path(args.dest), args.names)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkmix",
        description="Latent component models for networks, fitted by collapsed Gibbs sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_network(p):
        p.add_argument("--edges", help="edge-list file: '<src> <dst> [multiplicity]' per line")
        p.add_argument("--labels", help="label file: '<node-id> <class-name>' per line")
        p.add_argument("--directed", action=argparse.BooleanOptionalAction, default=None,
                       help="treat the edge file as directed")
        p.add_argument("--symmetrize", action=argparse.BooleanOptionalAction, default=None,
                       help="collapse to a simple undirected network")
        p.add_argument("--giant-component", dest="giant_component",
                       action=argparse.BooleanOptionalAction, default=None,
                       help="keep only the largest connected component")
        p.add_argument("--config", help="JSON config (or fit manifest); flags override")

    fit = sub.add_parser("fit", help="run Gibbs chains and write snapshots")
    add_common_network(fit)
    fit.add_argument("--model", choices=[ICMC, SSNLDA])
    fit.add_argument("--prior", choices=[DIRICHLET, DP])
    fit.add_argument("--k", type=int, help="component count (Dirichlet prior)")
    fit.add_argument("--alpha", type=float, help="prior concentration (default 1/K, DP: 0.3)")
    fit.add_argument("--beta", type=float, help="node smoothing (default 0.01, DP: 0.3)")
    fit.add_argument("--iterations", type=int, help="full sweeps per chain")
    fit.add_argument("--burn-in", dest="burn_in", type=int)
    fit.add_argument("--thin", type=int, help="snapshot every t-th sweep after burn-in")
    fit.add_argument("--chains", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--jobs", type=int, help="parallel chain workers")
    fit.add_argument("--out", help="output directory")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="score snapshots against labels and structure")
    add_common_network(ev)
    ev.add_argument("--snapshots", help="directory with chain_*.json snapshot files")
    ev.add_argument("--role", choices=["sender", "receiver"],
                    help="membership side for the directed model")
    ev.add_argument("--out", help="output directory")
    ev.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("predict", help="membership of new nodes from their links")
    add_common_network(pr)
    pr.add_argument("--snapshots", help="directory with chain_*.json snapshot files")
    pr.add_argument("--new-edges", dest="new_edges",
                    help="file of '<new-node-id> <existing-node-id>' lines")
    pr.add_argument("--refine-sweeps", dest="refine_sweeps", type=int)
    pr.add_argument("--draws", type=int, help="posterior predictive draws to average")
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out", help="output directory")
    pr.set_defaults(func=cmd_predict)

    oc = sub.add_parser("oracle-check", help="verify sampler weights against exact joints")
    oc.add_argument("--instances", type=int, default=200)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--max-links", dest="max_links", type=int, default=6)
    oc.add_argument("--max-nodes", dest="max_nodes", type=int, default=5)
    oc.add_argument("--max-components", dest="max_components", type=int, default=3)
    oc.add_argument("--tolerance", type=float, default=1e-12)
    oc.set_defaults(func=cmd_oracle_check)

    fd = sub.add_parser("fetch-data", help="download and prepare the evaluation datasets")
    fd.add_argument("--dest", default="data")
    fd.add_argument("--names", nargs="*", default=None,
                    help="subset of datasets (default: all)")
    fd.set_defaults(func=cmd_fetch_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
