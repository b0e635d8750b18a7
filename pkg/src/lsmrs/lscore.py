"""Latent space model mathematics.

The linear predictor for pair (i, j) in layer r at time t is the layer
intercept minus a distance between the nodes' latent coordinates,

    eta = alpha[r, t] - dist(x[:, i, t], x[:, j, t]),

with either the Euclidean or the squared Euclidean distance. Edge
weights are Bernoulli (logistic link) or Poisson (log link) given eta.
Coordinates carry a Gaussian prior at the first time slice and Gaussian
random-walk increments afterwards; intercepts have an independent
Gaussian prior.

Conditional log-posteriors omit normalizing constants of the Gaussian
prior terms (they never depend on the candidate value, so all
Metropolis-Hastings ratios are unaffected). Edge log-likelihood terms
are kept in full, including the Poisson log-factorial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .netdata import NetworkTensor, WeightFamily

__all__ = [
    "DISTANCES",
    "LatentState",
    "PriorSpec",
    "eta_of",
    "edge_loglik",
    "node_conditional_logpost",
    "alpha_conditional_logpost",
    "joint_logpost",
    "recenter",
]

DISTANCES = ("euclidean", "sq_euclidean")


@dataclass
class LatentState:
    """Full parameter state of one chain.

    ``coords`` has shape (dim, n_nodes, n_times); coordinates are shared
    across layers. ``alphas`` has shape (n_layers, n_times).
    """

    coords: np.ndarray
    alphas: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        self.alphas = np.asarray(self.alphas, dtype=np.float64)
        if self.coords.ndim != 3:
            raise ValueError("coords must have shape (dim, n_nodes, n_times)")
        if self.alphas.ndim != 2:
            raise ValueError("alphas must have shape (n_layers, n_times)")
        if self.coords.shape[2] != self.alphas.shape[1]:
            raise ValueError("coords and alphas disagree on n_times")
        if not (np.isfinite(self.coords).all() and np.isfinite(self.alphas).all()):
            raise ValueError("latent state entries must be finite")

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[1]

    @property
    def n_times(self) -> int:
        return self.coords.shape[2]

    @property
    def n_layers(self) -> int:
        return self.alphas.shape[0]

    def copy(self) -> "LatentState":
        return LatentState(self.coords.copy(), self.alphas.copy())


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the latent-state prior.

    ``sigma2`` is the coordinate variance at the first time slice
    (covariance sigma2 * I), ``sigma2_eps`` the random-walk innovation
    variance linking consecutive slices. Intercepts are a priori
    N(alpha_prior_mean, alpha_prior_var), weakly informative by default.
    """

    sigma2: float = 1.0
    sigma2_eps: float = 0.01
    alpha_prior_mean: float = 0.0
    alpha_prior_var: float = 100.0
    distance: str = "sq_euclidean"

    def __post_init__(self):
        if self.sigma2 <= 0 or self.sigma2_eps <= 0 or self.alpha_prior_var <= 0:
            raise ValueError("prior variances must be positive")
        if self.distance not in DISTANCES:
            raise ValueError(f"distance must be one of {DISTANCES}")


def eta_of(alpha: float, xi, xj, distance: str = "sq_euclidean") -> float:
    """Linear predictor: intercept minus the (squared) Euclidean distance."""
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    if xi.shape != xj.shape:
        raise ValueError(f"coordinate dimensions differ: {xi.shape} vs {xj.shape}")
    d2 = float(np.dot(xi - xj, xi - xj))
    if distance == "sq_euclidean":
        return float(alpha) - d2
    if distance == "euclidean":
        return float(alpha) - np.sqrt(d2)
    raise ValueError(f"distance must be one of {DISTANCES}")


def edge_loglik(y, eta, family: WeightFamily):
    """Log density of one edge weight given its linear predictor.

    Vectorized over ``y`` and ``eta``. Bernoulli uses the overflow-safe
    softplus form y*eta - log(1 + exp(eta)); Poisson uses
    y*eta - exp(eta) - log(y!).
    """
    y = np.asarray(y, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if family.kind == "bernoulli_logit":
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("bernoulli_logit weights must be 0 or 1")
        out = y * eta - np.logaddexp(0.0, eta)
    else:
        if np.any(y < 0) or not np.all(y == np.floor(y)):
            raise ValueError("poisson_log weights must be non-negative integers")
        out = y * eta - np.exp(eta) - gammaln(y + 1.0)
    return out if out.ndim else float(out)


def _pair_etas(coords_t: np.ndarray, alpha: float, distance: str) -> np.ndarray:
    """eta for all pairs i < j (row-major order) at one time slice."""
    xs = coords_t.T  # (N, d)
    iu, ju = np.triu_indices(xs.shape[0], 1)
    diff = xs[iu] - xs[ju]
    d2 = np.einsum("pk,pk->p", diff, diff)
    return alpha - (d2 if distance == "sq_euclidean" else np.sqrt(d2))


def _node_prior_quad(coords, i: int, t: int, x, prior: PriorSpec) -> float:
    """Gaussian prior terms in x involving node i's time-t coordinate.

    Chain-graph neighbourhood: the marginal at the first slice, plus the
    backward and forward random-walk increments where they exist.
    Normalizing constants are omitted.
    """
    quad = 0.0
    if t == 0:
        quad -= 0.5 * float(np.dot(x, x)) / prior.sigma2
    else:
        d_prev = x - coords[:, i, t - 1]
        quad -= 0.5 * float(np.dot(d_prev, d_prev)) / prior.sigma2_eps
    if t < coords.shape[2] - 1:
        d_next = coords[:, i, t + 1] - x
        quad -= 0.5 * float(np.dot(d_next, d_next)) / prior.sigma2_eps
    return quad


def node_conditional_logpost(
    i: int,
    t: int,
    x_candidate,
    state: LatentState,
    net: NetworkTensor,
    prior: PriorSpec,
) -> float:
    """Log conditional posterior of node i's time-t coordinate at a candidate.

    Sums the edge log-likelihood over every layer and every partner
    j != i, plus the Gaussian prior terms linking the candidate to its
    chain-graph neighbours (see module docstring for dropped constants).
    """
    if not (0 <= i < net.n_nodes and 0 <= t < net.n_times):
        raise IndexError(f"node/time ({i}, {t}) out of range")
    x = np.asarray(x_candidate, dtype=np.float64)
    xs = state.coords[:, :, t].T  # (N, d)
    diff = xs - x
    d2 = np.einsum("nk,nk->n", diff, diff)
    dist = d2 if prior.distance == "sq_euclidean" else np.sqrt(d2)
    mask = np.arange(net.n_nodes) != i
    dense = net.dense
    total = 0.0
    for r in range(net.n_layers):
        eta = state.alphas[r, t] - dist
        total += float(np.sum(edge_loglik(dense[r, t, i, mask], eta[mask], net.families[r])))
    return total + _node_prior_quad(state.coords, i, t, x, prior)


def alpha_conditional_logpost(
    r: int,
    t: int,
    alpha_candidate: float,
    state: LatentState,
    net: NetworkTensor,
    prior: PriorSpec,
) -> float:
    """Log conditional posterior of the (r, t) intercept at a candidate."""
    if not (0 <= r < net.n_layers and 0 <= t < net.n_times):
        raise IndexError(f"layer/time ({r}, {t}) out of range")
    etas = _pair_etas(state.coords[:, :, t], float(alpha_candidate), prior.distance)
    iu, ju = np.triu_indices(net.n_nodes, 1)
    y = net.dense[r, t][iu, ju]
    ll = float(np.sum(edge_loglik(y, etas, net.families[r])))
    dev = float(alpha_candidate) - prior.alpha_prior_mean
    return ll - 0.5 * dev * dev / prior.alpha_prior_var


def joint_logpost(state: LatentState, net: NetworkTensor, prior: PriorSpec) -> float:
    """Full log posterior (likelihood over all pairs plus all prior terms).

    Uses the same dropped-constants convention as the conditionals, so
    differences of this function match differences of the conditionals
    when a single coordinate or intercept changes.
    """
    total = 0.0
    iu, ju = np.triu_indices(net.n_nodes, 1)
    dense = net.dense
    for t in range(net.n_times):
        for r in range(net.n_layers):
            etas = _pair_etas(state.coords[:, :, t], state.alphas[r, t], prior.distance)
            total += float(np.sum(edge_loglik(dense[r, t][iu, ju], etas, net.families[r])))
    x = state.coords
    total -= 0.5 * float(np.sum(x[:, :, 0] ** 2)) / prior.sigma2
    for t in range(1, net.n_times):
        inc = x[:, :, t] - x[:, :, t - 1]
        total -= 0.5 * float(np.sum(inc * inc)) / prior.sigma2_eps
    dev = state.alphas - prior.alpha_prior_mean
    total -= 0.5 * float(np.sum(dev * dev)) / prior.alpha_prior_var
    return total


def recenter(state: LatentState) -> LatentState:
    """Subtract the across-node coordinate mean within each time slice.

    A pure translation per slice: every pairwise distance, hence every
    eta and the whole likelihood, is unchanged. Intercepts are untouched.
    """
    centered = state.coords - state.coords.mean(axis=1, keepdims=True)
    return LatentState(centered, state.alphas.copy())
