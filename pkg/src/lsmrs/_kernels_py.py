"""Pure NumPy implementations of the sampler's hot kernels.

Mirrors the compiled module ``lsmrs._kernels`` and is selected by
``lsmrs.kernels`` when the extension is unavailable (or when the
environment variable LSMRS_KERNELS=python forces it).

Likelihood sums here drop weight-only constants (the Poisson
log-factorial): every caller uses them inside Metropolis-Hastings
ratios, where those constants cancel.
"""

import numpy as np

BERNOULLI = 0
POISSON = 1


def _loglik_terms(y, eta, fam):
    if fam == BERNOULLI:
        return y * eta - np.logaddexp(0.0, eta)
    return y * eta - np.exp(eta)


def pair_dists(coords, squared):
    """Pairwise distances of the (N, d) rows, flat upper triangle (i < j)."""
    coords = np.asarray(coords)
    iu, ju = np.triu_indices(coords.shape[0], 1)
    diff = coords[iu] - coords[ju]
    d2 = np.einsum("pk,pk->p", diff, diff)
    return d2 if squared else np.sqrt(d2)


def pairs_loglik(y, fam, alpha, dists):
    """Edge log-likelihood summed over a flat pair array for one layer."""
    return float(np.sum(_loglik_terms(y, alpha - dists, fam)))


def node_loglik(weights_t, fams, alpha_t, coords_t, i, xi, squared):
    """Edge log-likelihood of node i against all partners, summed over layers.

    ``weights_t`` is the (R, N, N) dense slice at one time, ``coords_t``
    the (N, d) coordinates, ``xi`` the candidate coordinate for node i.
    """
    coords_t = np.asarray(coords_t)
    diff = coords_t - np.asarray(xi)
    d2 = np.einsum("nk,nk->n", diff, diff)
    dist = d2 if squared else np.sqrt(d2)
    total = 0.0
    for r in range(weights_t.shape[0]):
        terms = _loglik_terms(weights_t[r, i], alpha_t[r] - dist, fams[r])
        terms[i] = 0.0
        total += float(np.sum(terms))
    return total


def node_loglik_delta(weights_t, fams, alpha_t, coords_t, i, x_new, squared):
    """Change in node i's edge log-likelihood when x_i moves to ``x_new``."""
    old = node_loglik(weights_t, fams, alpha_t, coords_t, i, coords_t[i], squared)
    new = node_loglik(weights_t, fams, alpha_t, coords_t, i, x_new, squared)
    return new - old
