"""Independent brute-force reference implementations used as oracles.

Everything here is written with explicit loops and scalar math on
purpose, sharing no code with the library paths it checks.
"""

import itertools
import math


def edge_ll(y, eta, kind):
    """Scalar edge log-likelihood, full constants included."""
    if kind == "bernoulli_logit":
        # log sigma(eta) for y=1, log(1 - sigma(eta)) for y=0
        if y == 1.0:
            return -math.log1p(math.exp(-eta)) if eta >= 0 else eta - math.log1p(math.exp(eta))
        return -eta - math.log1p(math.exp(-eta)) if eta >= 0 else -math.log1p(math.exp(eta))
    return y * eta - math.exp(eta) - math.lgamma(y + 1.0)


def dist(xi, xj, kind):
    d2 = sum((a - b) ** 2 for a, b in zip(xi, xj))
    return d2 if kind == "sq_euclidean" else math.sqrt(d2)


def full_logpost(coords, alphas, net, prior):
    """Joint log posterior by explicit loops.

    ``coords`` has shape (d, N, T), ``alphas`` (R, T). Gaussian
    normalizing constants are dropped, matching the library convention;
    edge terms are complete.
    """
    d, n, T = coords.shape
    R = alphas.shape[0]
    total = 0.0
    for r in range(R):
        for t in range(T):
            for i in range(n):
                for j in range(i + 1, n):
                    xi = [coords[k, i, t] for k in range(d)]
                    xj = [coords[k, j, t] for k in range(d)]
                    eta = alphas[r, t] - dist(xi, xj, prior.distance)
                    total += edge_ll(net.weight(i, j, r, t), eta, net.families[r].kind)
    for i in range(n):
        for k in range(d):
            total -= 0.5 * coords[k, i, 0] ** 2 / prior.sigma2
            for t in range(1, T):
                inc = coords[k, i, t] - coords[k, i, t - 1]
                total -= 0.5 * inc * inc / prior.sigma2_eps
    for r in range(R):
        for t in range(T):
            dev = alphas[r, t] - prior.alpha_prior_mean
            total -= 0.5 * dev * dev / prior.alpha_prior_var
    return total


def alpha_logpost(r, t, a, coords, net, prior):
    """Conditional log posterior of one intercept by explicit loops."""
    d, n, _T = coords.shape
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            xi = [coords[k, i, t] for k in range(d)]
            xj = [coords[k, j, t] for k in range(d)]
            eta = a - dist(xi, xj, prior.distance)
            total += edge_ll(net.weight(i, j, r, t), eta, net.families[r].kind)
    dev = a - prior.alpha_prior_mean
    return total - 0.5 * dev * dev / prior.alpha_prior_var


def index_set_size_law(q):
    """Exact P(M = m | M >= 1) by enumerating all Bernoulli outcomes."""
    n = len(q)
    probs = {}
    for bits in itertools.product((0, 1), repeat=n):
        p = 1.0
        for b, qi in zip(bits, q):
            p *= qi if b else (1.0 - qi)
        m = sum(bits)
        probs[m] = probs.get(m, 0.0) + p
    nonempty = 1.0 - probs.get(0, 0.0)
    return {m: p / nonempty for m, p in probs.items() if m > 0}


def expected_set_size(q):
    """E[M | M >= 1] from the same enumeration."""
    law = index_set_size_law(q)
    return sum(m * p for m, p in law.items())


def ar1_truncated_ess_fraction(phi):
    """Analytic ESS/n for an AR(1) chain under the first-small-lag cutoff.

    Autocorrelations are phi**t; the sum runs up to and including the
    first lag with phi**t < 0.05.
    """
    if phi == 0.0:
        return 1.0
    s, t = 0.0, 1
    while True:
        rho = phi ** t
        s += rho
        if abs(rho) < 0.05:
            break
        t += 1
    return 1.0 / (1.0 + 2.0 * s)
