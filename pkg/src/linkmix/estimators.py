"""Scikit-learn style estimators for both network component models.

``fit`` runs one or more collapsed Gibbs chains on a network, ``transform``
returns the per-node membership matrix of the best chain (highest mean
log score over the trace tail), ``predict`` its argmax labels.  Chains,
traces, and snapshots stay available on the fitted estimator for custom
evaluation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .evaluation import hard_partition, memberships_from_samples
from .kernels import DIRICHLET, DP, ICMC, SSNLDA, Hyperparameters
from .network import Network, symmetrize
from .sampler import ChainConfig, predict_new_node, run_chains
from .validation import as_network, check_positive

DEFAULT_DP_ALPHA = 0.3
DEFAULT_DP_BETA = 0.3
DEFAULT_DIRICHLET_BETA = 0.01


class _ComponentModel(BaseEstimator):
    """Shared fit/transform machinery; subclasses pin the model kind."""

    _model: str = ""

    def __init__(
        self,
        n_components=None,
        alpha=None,
        beta=None,
        prior="dirichlet",
        n_sweeps=1000,
        burn_in=None,
        thinning=None,
        n_chains=1,
        n_jobs=1,
        random_state=0,
        engine="auto",
    ):
        self.n_components = n_components
        self.alpha = alpha
        self.beta = beta
        self.prior = prior
        self.n_sweeps = n_sweeps
        self.burn_in = burn_in
        self.thinning = thinning
        self.n_chains = n_chains
        self.n_jobs = n_jobs
        self.random_state = random_state
        self.engine = engine

    # -- configuration -------------------------------------------------------

    def _hyperparameters(self) -> Hyperparameters:
        if self.prior not in (DIRICHLET, DP):
            raise ValueError(f"prior must be 'dirichlet' or 'dp', got {self.prior!r}")
        if self.prior == DIRICHLET:
            if self.n_components is None:
                raise ValueError("n_components is required with the Dirichlet prior")
            alpha = 1.0 / self.n_components if self.alpha is None else self.alpha
            beta = DEFAULT_DIRICHLET_BETA if self.beta is None else self.beta
        else:
            if self.n_components is not None:
                raise ValueError("n_components must be None with the DP prior")
            alpha = DEFAULT_DP_ALPHA if self.alpha is None else self.alpha
            beta = DEFAULT_DP_BETA if self.beta is None else self.beta
        return Hyperparameters(
            model=self._model,
            prior=self.prior,
            beta=check_positive("beta", beta),
            alpha=check_positive("alpha", alpha),
            n_components=self.n_components,
        )

    def _chain_config(self) -> ChainConfig:
        burn_in = self.n_sweeps // 2 if self.burn_in is None else self.burn_in
        if self.thinning is None:
            thinning = max(1, (self.n_sweeps - burn_in) // 100)
        else:
            thinning = self.thinning
        return ChainConfig(
            iterations=self.n_sweeps,
            burn_in=burn_in,
            thinning=thinning,
            seed=self.random_state if self.random_state is not None else 0,
        )

    def _as_network(self, X) -> Network:
        raise NotImplementedError

    # -- estimator API ---------------------------------------------------------

    def fit(self, X, y=None):
        """Run the configured chains on a network or (L, 2) edge array."""
        net = self._as_network(X)
        hp = self._hyperparameters()
        cfg = self._chain_config()
        self.network_ = net
        self.chains_ = run_chains(
            net, hp, cfg, n_chains=self.n_chains, n_jobs=self.n_jobs, engine=self.engine
        )
        tail = max(1, cfg.iterations // 10)
        scores = [float(c.trace[-tail:].mean()) for c in self.chains_]
        self.chain_scores_ = np.asarray(scores)
        best = int(np.argmax(scores))
        self.best_chain_ = self.chains_[best]
        self.component_ids_, self.memberships_ = memberships_from_samples(
            self.best_chain_, net, role="sender"
        )
        self.labels_ = hard_partition(self.memberships_)
        self.n_components_ = len(self.component_ids_)
        return self

    def transform(self, X=None) -> np.ndarray:
        """Membership matrix (nodes x components) of the fitted network."""
        self._check_fitted()
        if X is not None:
            raise ValueError(
                "memberships are only defined for the fitted network; "
                "use predict_new for unseen nodes"
            )
        return self.memberships_

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform()

    def predict(self, X=None) -> np.ndarray:
        """Hard component label per node of the fitted network."""
        self._check_fitted()
        if X is not None:
            raise ValueError("labels are only defined for the fitted network")
        return self.labels_

    def predict_new(self, new_links, refine_sweeps=0, n_draws=100):
        """Membership of an unseen node linked to the given existing nodes."""
        self._check_fitted()
        ids, probs = predict_new_node(
            self.network_,
            self.best_chain_.hyperparameters,
            self.best_chain_.samples[-1],
            new_links,
            refine_sweeps=refine_sweeps,
            n_draws=n_draws,
            seed=self.best_chain_.seed,
        )
        return ids, probs

    def score(self, X=None, y=None) -> float:
        """Mean per-sweep log score over the best chain's trace tail."""
        self._check_fitted()
        tail = max(1, len(self.best_chain_.trace) // 10)
        return float(self.best_chain_.trace[-tail:].mean())

    def _check_fitted(self):
        if not hasattr(self, "chains_"):
            raise RuntimeError("estimator is not fitted; call fit first")


class ICMc(_ComponentModel):
    """Undirected bag-of-links component model (community finding).

    Each link comes from a latent component that draws both endpoints from
    its own node distribution, so components gather internally
    well-connected node sets.  Small ``beta`` prefers crisp, mutually
    exclusive communities; large ``beta`` gives graded overlapping ones.
    """

    _model = ICMC

    def _as_network(self, X) -> Network:
        net = as_network(X, directed=False)
        if net.directed:
            raise ValueError(
                "this model needs an undirected network; apply symmetrize() first"
            )
        return net


class SSNLDA(_ComponentModel):
    """Directed per-sender mixture model (structural equivalence).

    Every node mixes over latent link-target profiles; nodes grouping into
    a component link to similar targets.  Undirected input is read as each
    node sending one link to every neighbor.
    """

    _model = SSNLDA

    def __init__(
        self,
        n_components=None,
        alpha=None,
        beta=None,
        prior="dirichlet",
        n_sweeps=1000,
        burn_in=None,
        thinning=None,
        n_chains=1,
        n_jobs=1,
        random_state=0,
        engine="auto",
        membership_role="sender",
    ):
        super().__init__(
            n_components=n_components,
            alpha=alpha,
            beta=beta,
            prior=prior,
            n_sweeps=n_sweeps,
            burn_in=burn_in,
            thinning=thinning,
            n_chains=n_chains,
            n_jobs=n_jobs,
            random_state=random_state,
            engine=engine,
        )
        self.membership_role = membership_role

    def _as_network(self, X) -> Network:
        return as_network(X, directed=True)

    def fit(self, X, y=None):
        super().fit(X)
        if self.membership_role != "sender":
            self.component_ids_, self.memberships_ = memberships_from_samples(
                self.best_chain_, self.network_, role=self.membership_role
            )
            self.labels_ = hard_partition(self.memberships_)
        return self


def symmetrized(X) -> Network:
    """Convenience: coerce input to a network and symmetrize it."""
    return symmetrize(as_network(X, directed=True))
