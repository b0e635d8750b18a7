"""Chain diagnostics: effective sample size, error metrics, acceptance
summaries and a Kolmogorov-Smirnov convergence sequence.

The ESS estimator divides the chain length by 1 + 2 * sum of sample
autocorrelations, where the sum runs up to and including the first lag
whose autocorrelation drops below 0.05 in absolute value.
Autocorrelations are computed by direct summation (the cutoff is
typically small), with a hard cap at lag n/2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ess",
    "mse",
    "chain_variance",
    "ks_statistic",
    "ks_convergence_sequence",
    "KS_CRITICAL_COEFF",
    "DiagnosticsReport",
    "report_from_trace",
]

logger = logging.getLogger(__name__)

#: c(alpha) for the two-sample KS rejection threshold at alpha = 0.01.
KS_CRITICAL_COEFF = 1.628

_ACF_CUTOFF = 0.05


def ess(chain) -> float:
    """Effective sample size of one scalar chain, clamped to (0, n].

    A constant chain is defined to have ESS = n (zero autocorrelation by
    convention); negative autocorrelation sums are clamped to n as well.
    """
    x = np.asarray(chain, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 10:
        raise ValueError("need a 1-d chain of length >= 10")
    n = x.shape[0]
    if np.all(x == x[0]):
        logger.warning("constant chain passed to ess(); returning n by convention")
        return float(n)
    xc = x - x.mean()
    c0 = float(np.dot(xc, xc)) / n
    acf_sum = 0.0
    for lag in range(1, n // 2 + 1):
        rho = float(np.dot(xc[:-lag], xc[lag:])) / n / c0
        acf_sum += rho
        if abs(rho) < _ACF_CUTOFF:
            break
    denom = 1.0 + 2.0 * acf_sum
    if denom <= 0.0:
        return float(n)
    return float(min(n / denom, n))


def mse(chain, truth: float) -> float:
    """Mean squared deviation of the draws from a known true value."""
    x = np.asarray(chain, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty chain")
    return float(np.mean((x - truth) ** 2))


def chain_variance(chain) -> float:
    """Unbiased sample variance of the draws."""
    x = np.asarray(chain, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two draws")
    return float(np.var(x, ddof=1))


def ks_statistic(sample_a, sample_b, level_coeff: float = KS_CRITICAL_COEFF):
    """Two-sample Kolmogorov-Smirnov D and its rejection threshold.

    D is the sup distance between the empirical CDFs; the threshold is
    coeff * sqrt((n + m) / (n m)) with coeff = 1.628 for the 1% level.
    """
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise ValueError("samples must be non-empty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / n
    fb = np.searchsorted(b, grid, side="right") / m
    d = float(np.max(np.abs(fa - fb)))
    critical = level_coeff * np.sqrt((n + m) / (n * m))
    return d, float(critical)


def ks_convergence_sequence(chain, window: int = 500, thin: int = 10):
    """KS comparisons of successive chain windows against the last one.

    The chain is cut into non-overlapping windows of ``window``
    iterations (a partial trailing window is dropped), each window is
    thinned by ``thin``, and every window except the last is compared
    against the last. Returns a list of (window_index, D, critical,
    passed) tuples, where passed means D below the 1% threshold.
    """
    x = np.asarray(chain, dtype=np.float64)
    n_windows = x.shape[0] // window
    if n_windows < 2:
        raise ValueError("chain too short: need at least two full windows")
    pieces = [x[k * window:(k + 1) * window:thin] for k in range(n_windows)]
    reference = pieces[-1]
    out = []
    for k, piece in enumerate(pieces[:-1]):
        d, crit = ks_statistic(piece, reference)
        out.append((k, d, crit, d < crit))
    return out


@dataclass
class DiagnosticsReport:
    """Flat summary of one chain, JSON-ready.

    Per-parameter entries are keyed by readable labels such as
    ``alpha[r=1,t=1]`` and ``x[node=3,dim=2,t=1]`` (1-based, matching the
    trace files). ``per_coordinate`` aggregates node metrics for each
    latent dimension; ``ks`` holds the per-dimension convergence
    sequences averaged across nodes.
    """

    ess: dict = field(default_factory=dict)
    mse: dict = field(default_factory=dict)
    variance: dict = field(default_factory=dict)
    acceptance_means: dict = field(default_factory=dict)
    per_coordinate: dict = field(default_factory=dict)
    ks: dict = field(default_factory=dict)
    runtime_seconds: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "ess": self.ess,
            "mse": self.mse,
            "variance": self.variance,
            "acceptance_means": self.acceptance_means,
            "per_coordinate": self.per_coordinate,
            "ks": self.ks,
            "runtime_seconds": self.runtime_seconds,
        }


def report_from_trace(trace, truth=None, ks_window: int = 500,
                      ks_thin: int = 10) -> DiagnosticsReport:
    """Diagnostics for every stored parameter chain of a trace.

    ``truth`` is an optional LatentState with the generating values;
    without it the MSE entries are omitted. KS sequences are computed
    per latent dimension (D averaged across nodes per window) when the
    chains are long enough, and skipped otherwise.
    """
    rep = DiagnosticsReport(runtime_seconds=trace.wall_time_seconds)
    kept, n_layers, n_times = trace.alpha_draws.shape
    _, dim, n_nodes, _ = trace.coord_draws.shape

    for r in range(n_layers):
        for t in range(n_times):
            label = f"alpha[r={r + 1},t={t + 1}]"
            chain = trace.alpha_draws[:, r, t]
            if kept >= 10:
                rep.ess[label] = ess(chain)
            if kept >= 2:
                rep.variance[label] = chain_variance(chain)
            if truth is not None:
                rep.mse[label] = mse(chain, truth.alphas[r, t])
            rep.acceptance_means[label] = float(np.nanmean(trace.accept_alpha[:, r, t]))

    ess_by_dim = np.full((dim, n_nodes, n_times), np.nan)
    for k in range(dim):
        for i in range(n_nodes):
            for t in range(n_times):
                label = f"x[node={i + 1},dim={k + 1},t={t + 1}]"
                chain = trace.coord_draws[:, k, i, t]
                if kept >= 10:
                    value = ess(chain)
                    rep.ess[label] = value
                    ess_by_dim[k, i, t] = value
                if kept >= 2:
                    rep.variance[label] = chain_variance(chain)
                if truth is not None:
                    rep.mse[label] = mse(chain, truth.coords[k, i, t])
    for i in range(n_nodes):
        for t in range(n_times):
            acc = trace.accept_nodes[:, i, t]
            rep.acceptance_means[f"x[node={i + 1},t={t + 1}]"] = float(np.nanmean(acc))

    for k in range(dim):
        entry = {"ess_mean": float(np.nanmean(ess_by_dim[k])) if kept >= 10 else None}
        if truth is not None:
            errs = [rep.mse[f"x[node={i + 1},dim={k + 1},t={t + 1}]"]
                    for i in range(n_nodes) for t in range(n_times)]
            entry["mse_mean"] = float(np.mean(errs))
        variances = [rep.variance.get(f"x[node={i + 1},dim={k + 1},t={t + 1}]")
                     for i in range(n_nodes) for t in range(n_times)]
        variances = [v for v in variances if v is not None]
        if variances:
            entry["variance_mean"] = float(np.mean(variances))
        rep.per_coordinate[f"dim={k + 1}"] = entry

    if kept >= 2 * ks_window:
        for k in range(dim):
            rows = {}
            for i in range(n_nodes):
                for t in range(n_times):
                    seq = ks_convergence_sequence(trace.coord_draws[:, k, i, t],
                                                  ks_window, ks_thin)
                    for (w, d, crit, ok) in seq:
                        rows.setdefault(w, []).append((d, crit, ok))
            rep.ks[f"dim={k + 1}"] = [
                {"window": w,
                 "d_mean": float(np.mean([d for d, _, _ in vals])),
                 "critical": vals[0][1],
                 "pass_fraction": float(np.mean([ok for _, _, ok in vals]))}
                for w, vals in sorted(rows.items())
            ]
    return rep
