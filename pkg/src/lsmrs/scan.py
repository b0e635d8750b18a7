"""Scan strategies: random index-set sampling and selection-probability
adaptation.

A multiple random scan selects the targets to refresh at each iteration
by independent Bernoulli draws with per-target probabilities q, redrawn
until at least one target is selected. Adaptive variants move each q
through a flipped logistic in the gap between the target's recent
average acceptance probability and the target acceptance rate,

    q_star = 1 / (1 + exp(abar - target + c)),

optionally damped by a vanishing sequence b_h, and always clamped to
[epsilon, 1] with epsilon > 0 so the chain keeps visiting every target.
Block variants apply the same machinery to groups of nodes, with the
block probabilities normalized to sum to one before drawing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netdata import NetworkTensor, degree_stats

__all__ = [
    "EPSILON_DEFAULT",
    "STRATEGIES",
    "DAMPINGS",
    "SelectionProbs",
    "BlockPartition",
    "ScanPlan",
    "draw_index_set",
    "update_selection_prob",
    "damped_update",
    "damping_coefficient",
    "normalize_block_probs",
    "build_partition_heuristic",
]

EPSILON_DEFAULT = 0.01

STRATEGIES = ("gs", "rsg", "mrsg", "amrsg", "b-mrsg", "b-amrsg")
DAMPINGS = ("none", "one_over_h")


def draw_index_set(q, rng: np.random.Generator) -> np.ndarray:
    """Sample a non-empty random index set from Bernoulli(q_i) draws.

    The whole vector is redrawn until at least one success, so the set
    is never empty (guaranteed to terminate for q bounded away from 0).
    Returns the selected indices in ascending order.
    """
    q = np.asarray(getattr(q, "q", q), dtype=np.float64)
    while True:
        hits = rng.random(q.shape[0]) < q
        if hits.any():
            return np.flatnonzero(hits)


def update_selection_prob(abar, target: float, c: float, epsilon: float = EPSILON_DEFAULT):
    """Flipped-logistic selection probability, clamped to [epsilon, 1].

    Decreasing in ``abar`` (targets accepting more than wanted get
    selected less) and decreasing in the shift ``c``. Vectorized.
    """
    q = 1.0 / (1.0 + np.exp(np.asarray(abar, dtype=np.float64) - target + c))
    out = np.clip(q, epsilon, 1.0)
    return out if out.ndim else float(out)


def damped_update(q_prev, q_star, b_h: float, epsilon: float = EPSILON_DEFAULT):
    """Convex combination (1 - b_h) q_prev + b_h q_star, clamped to [epsilon, 1].

    With b_h -> 0 the per-step change vanishes, which is what the
    ergodicity of the adaptive chain requires.
    """
    if not 0.0 <= b_h <= 1.0:
        raise ValueError("b_h must lie in [0, 1]")
    q = (1.0 - b_h) * np.asarray(q_prev, dtype=np.float64) + b_h * np.asarray(q_star)
    out = np.clip(q, epsilon, 1.0)
    return out if out.ndim else float(out)


def damping_coefficient(kind: str, h: int) -> float:
    """Damping sequence value at iteration h: 1 for "none", min(1, 10/h) else."""
    if kind == "none":
        return 1.0
    if kind == "one_over_h":
        return min(1.0, 10.0 / h)
    raise ValueError(f"damping must be one of {DAMPINGS}")


def normalize_block_probs(q) -> np.ndarray:
    """Scale positive block probabilities to sum to one."""
    q = np.asarray(q, dtype=np.float64)
    if q.size == 0 or np.any(q <= 0):
        raise ValueError("block probabilities must all be positive")
    return q / q.sum()


@dataclass
class SelectionProbs:
    """Per-target selection probabilities plus the acceptance window.

    ``acc_sum``/``acc_count`` accumulate instantaneous acceptance
    probabilities since the last adaptation step, only for iterations in
    which the target was actually selected.
    """

    q: np.ndarray
    epsilon: float = EPSILON_DEFAULT
    acc_sum: np.ndarray = field(default=None)  # type: ignore[assignment]
    acc_count: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if np.any(self.q < self.epsilon) or np.any(self.q > 1.0):
            raise ValueError("selection probabilities must lie in [epsilon, 1]")
        if self.acc_sum is None:
            self.acc_sum = np.zeros_like(self.q)
        if self.acc_count is None:
            self.acc_count = np.zeros(self.q.shape[0], dtype=np.int64)

    @property
    def n_targets(self) -> int:
        return self.q.shape[0]

    def record(self, indices, values) -> None:
        """Accumulate acceptance probabilities for the selected targets."""
        np.add.at(self.acc_sum, indices, values)
        np.add.at(self.acc_count, indices, 1)

    def window_means(self) -> np.ndarray:
        """Average acceptance per target over the window; NaN if never selected."""
        with np.errstate(invalid="ignore"):
            return np.where(self.acc_count > 0, self.acc_sum / self.acc_count, np.nan)

    def reset_window(self) -> None:
        self.acc_sum[:] = 0.0
        self.acc_count[:] = 0

    def adapt(self, target: float, c: float, b_h: float) -> None:
        """One adaptation step: flipped-logistic update, damped by b_h.

        Targets never selected in the window keep their probability.
        The window is cleared afterwards.
        """
        abar = self.window_means()
        seen = ~np.isnan(abar)
        if seen.any():
            q_star = update_selection_prob(abar[seen], target, c, self.epsilon)
            self.q[seen] = damped_update(self.q[seen], q_star, b_h, self.epsilon)
        self.reset_window()


@dataclass(frozen=True)
class BlockPartition:
    """Partition of the node set into K non-empty, covering blocks."""

    assignment: np.ndarray
    n_blocks: int

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", assignment)
        if self.n_blocks < 1:
            raise ValueError("need at least one block")
        if assignment.ndim != 1:
            raise ValueError("assignment must be a flat node -> block map")
        counts = np.bincount(assignment, minlength=self.n_blocks)
        if counts.shape[0] != self.n_blocks or np.any(counts == 0):
            raise ValueError("blocks must be non-empty and numbered 0..K-1")

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_blocks)

    def members(self, k: int) -> np.ndarray:
        """Nodes of block k, ascending."""
        return np.flatnonzero(self.assignment == k)


def build_partition_heuristic(net: NetworkTensor, n_blocks: int) -> BlockPartition:
    """Split nodes into strength-sorted contiguous groups.

    Nodes are ordered by decreasing total strength and cut into
    ``n_blocks`` quantile groups, a cheap core-periphery style blocking.
    Deterministic given the network (ties keep node order).
    """
    if not 1 <= n_blocks <= net.n_nodes:
        raise ValueError(f"n_blocks must lie in [1, {net.n_nodes}]")
    order = np.argsort(-degree_stats(net), kind="stable")
    assignment = np.empty(net.n_nodes, dtype=np.int64)
    for k, group in enumerate(np.array_split(order, n_blocks)):
        assignment[group] = k
    return BlockPartition(assignment=assignment, n_blocks=n_blocks)


@dataclass(frozen=True)
class ScanPlan:
    """Scan strategy descriptor used to configure a chain.

    ``q0`` is the initial (or fixed) per-target selection probability,
    ``u`` the adaptation period in iterations, ``c`` the logistic shift,
    ``n_blocks`` the number of blocks for the block strategies (a
    precomputed ``partition`` takes precedence over the heuristic).
    """

    strategy: str = "gs"
    q0: float = 0.5
    u: int = 100
    c: float = 0.0
    epsilon: float = EPSILON_DEFAULT
    n_blocks: int | None = None
    partition: BlockPartition | None = None
    damping: str = "one_over_h"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not self.epsilon <= self.q0 <= 1.0:
            raise ValueError("q0 must lie in [epsilon, 1]")
        if self.u < 1:
            raise ValueError("adaptation period u must be >= 1")
        if self.damping not in DAMPINGS:
            raise ValueError(f"damping must be one of {DAMPINGS}")
        if self.is_block and self.n_blocks is None and self.partition is None:
            raise ValueError(f"{self.strategy} needs n_blocks or a partition")

    @property
    def is_block(self) -> bool:
        return self.strategy in ("b-mrsg", "b-amrsg")

    @property
    def is_adaptive(self) -> bool:
        return self.strategy in ("amrsg", "b-amrsg")
