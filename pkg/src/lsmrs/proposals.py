"""Adaptive Metropolis-Hastings proposal schemes with per-target state.

Three Gaussian schemes are provided:

* ``"global"`` (default): a jointly adapted log scale, running mean and
  covariance. Proposal N(theta, delta * Sigma); after each step, with
  gamma_h = h**-psi,

      log delta += gamma_h * (accept_prob - target)
      mu        += gamma_h * (theta - mu)
      Sigma     += gamma_h * ((theta - mu_old)(theta - mu_old)' - Sigma).

* ``"haario"``: empirical-covariance adaptation. The first 2 d steps
  (and afterwards a small mixture fraction beta of steps) use the fixed
  component N(theta, 0.1**2 / d * I); the remaining steps use
  N(theta, 2.38 / d * Sigma) with Sigma the running sample covariance
  (a 1e-6 diagonal jitter is added when forming the proposal).

* ``"incremental"``: scalar log standard deviation delta, proposal
  N(theta, exp(2 delta) * I). Every ``period`` steps delta moves by
  1 / b where b counts completed adaptation batches, downwards when the
  acceptance probability is at or below target, upwards otherwise.

Adaptation feeds on the instantaneous acceptance probability
min(alpha, 1), not the binary accept indicator, and its step sizes
vanish as h grows (diminishing adaptation). Each sampled target owns
one ProposalState; states are never shared between chains.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["VARIANTS", "ProposalState", "propose", "adapt"]

VARIANTS = ("global", "haario", "incremental")

_HAARIO_FIXED_SD2 = 0.1 ** 2
_HAARIO_JITTER = 1e-6

logger = logging.getLogger(__name__)


@dataclass
class ProposalState:
    """Mutable adaptation state for one sampled target.

    ``scale`` is delta: a covariance multiplier for "global", a log
    standard deviation for "incremental", unused by "haario".
    ``step_count`` is the number of completed adapt() calls.
    """

    dim: int
    variant: str = "global"
    scale: float = 0.1
    psi: float = 0.6
    beta: float = 0.05
    period: int = 50
    target: float = 0.234
    step_count: int = 0
    mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    cov: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not 0 < self.psi < 1:
            raise ValueError("psi must lie in (0, 1)")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")
        if self.period < 1:
            raise ValueError("period must be a positive integer")
        if not 0 < self.target < 1:
            raise ValueError("target must lie in (0, 1)")
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.cov is None:
            self.cov = np.eye(self.dim)
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)


def _chol_factor(cov: np.ndarray, dim: int):
    """Cholesky factor of a small covariance, or None when not PD."""
    if dim == 1:
        v = cov[0, 0]
        return None if v <= 0 else np.array([[math.sqrt(v)]])
    if dim == 2:
        a, b, c = cov[0, 0], cov[1, 0], cov[1, 1]
        if a <= 0:
            return None
        l11 = math.sqrt(a)
        l21 = b / l11
        rem = c - l21 * l21
        if rem <= 0:
            return None
        return np.array([[l11, 0.0], [l21, math.sqrt(rem)]])
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return None


def _propose_with_noise(ps: ProposalState, current, z, select_u=None):
    """Candidate from pre-drawn N(0, I) noise ``z``.

    ``select_u`` is the uniform deciding the fixed-vs-adaptive mixture of
    the "haario" variant (ignored otherwise). A non-positive-definite
    covariance falls back to the variant's diagonal component.
    """
    d = ps.dim
    if ps.variant == "incremental":
        return current + math.exp(ps.scale) * z
    if ps.variant == "haario":
        fixed_sd = math.sqrt(_HAARIO_FIXED_SD2 / d)
        if ps.step_count + 1 <= 2 * d or (ps.beta > 0 and select_u < ps.beta):
            return current + fixed_sd * z
        factor = _chol_factor((2.38 / d) * (ps.cov + _HAARIO_JITTER * np.eye(d)), d)
        if factor is None:
            logger.debug("haario covariance not positive definite; using fixed component")
            return current + fixed_sd * z
        return current + factor @ z
    # global
    factor = _chol_factor(ps.cov, d)
    if factor is None:
        logger.debug("global covariance not positive definite; using diagonal fallback")
        return current + math.sqrt(ps.scale) * z
    return current + math.sqrt(ps.scale) * (factor @ z)


def propose(ps: ProposalState, current, rng: np.random.Generator):
    """Draw a candidate from the variant's proposal around ``current``."""
    current = np.asarray(current, dtype=np.float64)
    if current.shape != (ps.dim,):
        raise ValueError(f"current has shape {current.shape}, expected ({ps.dim},)")
    select_u = rng.random() if ps.variant == "haario" else None
    z = rng.standard_normal(ps.dim)
    return _propose_with_noise(ps, current, z, select_u)


def adapt(ps: ProposalState, accept_prob: float, new_value) -> ProposalState:
    """Update the proposal state after one accept/reject decision.

    ``accept_prob`` is the instantaneous acceptance probability of the
    step; ``new_value`` the post-decision value of the target.
    """
    value = np.asarray(new_value, dtype=np.float64)
    h = ps.step_count + 1
    if ps.variant == "global":
        gamma = h ** (-ps.psi)
        ps.scale *= math.exp(gamma * (accept_prob - ps.target))
        delta = value - ps.mean
        ps.mean = ps.mean + gamma * delta
        ps.cov = ps.cov + gamma * (np.outer(delta, delta) - ps.cov)
    elif ps.variant == "haario":
        delta = value - ps.mean
        ps.mean = ps.mean + delta / h
        ps.cov = ((h - 1) * ps.cov + np.outer(delta, value - ps.mean)) / h
    else:  # incremental
        if h % ps.period == 0:
            step = 1.0 / (h // ps.period)
            ps.scale += -step if accept_prob <= ps.target else step
    ps.step_count = h
    return ps
