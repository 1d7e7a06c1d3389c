"""Conditional link-assignment weights and membership formulas.

These are the pure numerical kernels of both models.  Every function takes
"left-out" counts, i.e. tallies from which the link being resampled has
already been removed, and returns unnormalized weights: factors constant
across components are dropped, normalization happens once per draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ICMC = "icmc"
SSNLDA = "ssnlda"
DIRICHLET = "dirichlet"
DP = "dp"


@dataclass(frozen=True)
class Hyperparameters:
    """Prior configuration shared by the kernels and the samplers.

    ``alpha`` is the symmetric Dirichlet concentration when
    ``prior == "dirichlet"`` and the Dirichlet-process concentration when
    ``prior == "dp"``.  ``n_components`` (K) is required for the Dirichlet
    prior and must be None for the DP prior, where the number of occupied
    components is data-driven.
    """

    model: str
    prior: str
    beta: float
    alpha: float
    n_components: int | None = None

    def __post_init__(self):
        if self.model not in (ICMC, SSNLDA):
            raise ValueError(f"unknown model {self.model!r}")
        if self.prior not in (DIRICHLET, DP):
            raise ValueError(f"unknown prior {self.prior!r}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.prior == DIRICHLET:
            if self.n_components is None or self.n_components < 1:
                raise ValueError("Dirichlet prior needs n_components >= 1")
        elif self.n_components is not None:
            raise ValueError("n_components is implied by the data under the DP prior")


def chooser(n: int, alpha_dp: float) -> float:
    """Occupancy-or-concentration weight of the Blackwell-MacQueen urn."""
    return float(n) if n != 0 else alpha_dp


def icmc_weight(
    k_i: int,
    k_j: int,
    n_z: int,
    hp: Hyperparameters,
    node_count: int,
    self_link: bool = False,
) -> float:
    """Unnormalized weight of one component for an undirected link (i, j).

    ``k_i``/``k_j`` are the component-wise endpoint degrees of i and j and
    ``n_z`` the component's link count, all with the resampled link removed.
    For a self-link the two endpoint draws land on the same node, so the
    numerator becomes ``(k_i + beta) * (k_i + 1 + beta)``.
    """
    beta = hp.beta
    mb = node_count * beta
    if self_link:
        num = (k_i + beta) * (k_i + 1.0 + beta)
    else:
        num = (k_i + beta) * (k_j + beta)
    den = (2.0 * n_z + 1.0 + mb) * (2.0 * n_z + mb)
    if hp.prior == DIRICHLET:
        comp = n_z + hp.alpha
    else:
        comp = chooser(n_z, hp.alpha)
    return num * comp / den


def ssnlda_weight(
    k_zj: int,
    k_z_total: int,
    n_iz: int,
    n_i_total: int,
    hp: Hyperparameters,
    node_count: int,
) -> float:
    """Unnormalized weight of one component for a directed link i -> j.

    ``k_zj`` counts links received by j from the component, ``k_z_total``
    all links of the component, ``n_iz`` links sent by i within the
    component and ``n_i_total`` all links sent by i; all without the
    resampled link.
    """
    beta = hp.beta
    receiver = (k_zj + beta) / (k_z_total + node_count * beta)
    if hp.prior == DIRICHLET:
        sender = (n_iz + hp.alpha) / (n_i_total + hp.n_components * hp.alpha)
    else:
        # The sender urn is Blackwell-MacQueen; the denominator is constant
        # across components and kept only for interpretability.
        sender = chooser(n_iz, hp.alpha) / (n_i_total + hp.alpha)
    return receiver * sender


def _normalize_counts(row: np.ndarray, nonempty: np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    total = row.sum()
    if total > 0:
        return row / total
    # isolated node: fall back to uniform over nonempty components
    out = np.asarray(nonempty, dtype=np.float64)
    if out.sum() == 0:
        raise ValueError("no nonempty components to define a membership over")
    return out / out.sum()


def node_membership_icmc(k_node: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Membership of one node: its endpoint counts, row-normalized.

    ``k_node`` holds the node's endpoint count per component.  Degree-0
    nodes get a uniform distribution over nonempty components.
    """
    return _normalize_counts(k_node, np.asarray(n) > 0)


def node_membership_ssnlda(counts_row: np.ndarray, totals: np.ndarray, role: str) -> np.ndarray:
    """Sender or receiver membership of one node.

    ``counts_row`` is the node's per-component sent (role="sender") or
    received (role="receiver") link counts; ``totals`` are component totals
    used only to identify nonempty components for the degree-0 fallback.
    """
    if role not in ("sender", "receiver"):
        raise ValueError(f"role must be 'sender' or 'receiver', got {role!r}")
    return _normalize_counts(counts_row, np.asarray(totals) > 0)


def reconstruct_parameters(
    n: np.ndarray,
    k: np.ndarray,
    hp: Hyperparameters,
    mode: str = "expectation",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Recover (theta, m) from count tables.

    ``n`` has one entry per component (all K components for the Dirichlet
    prior; the occupied ones for the DP prior) and ``k`` is the matching
    (components x nodes) endpoint/receiver count table.

    In ``expectation`` mode returns posterior means; in ``sample`` mode
    draws from the conditional Dirichlet distributions.  Under the DP prior
    theta gets one extra final bin carrying the combined mass of all empty
    components (the concentration parameter's share).
    """
    n = np.asarray(n, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if mode not in ("expectation", "sample"):
        raise ValueError(f"mode must be 'expectation' or 'sample', got {mode!r}")
    if mode == "sample" and rng is None:
        raise ValueError("sample mode needs an rng")

    node_count = k.shape[1]
    if hp.prior == DIRICHLET:
        theta_conc = n + hp.alpha
    else:
        theta_conc = np.append(n, hp.alpha)

    m_conc = k + hp.beta
    if mode == "expectation":
        theta = theta_conc / theta_conc.sum()
        m = m_conc / (k.sum(axis=1, keepdims=True) + node_count * hp.beta)
    else:
        theta = rng.dirichlet(theta_conc)
        m = np.vstack([rng.dirichlet(row) for row in m_conc]) if len(m_conc) else m_conc
    return theta, m
