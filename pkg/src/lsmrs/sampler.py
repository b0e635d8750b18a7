"""Chain orchestration: systematic and random-scan Metropolis-within-Gibbs.

Every iteration updates all intercepts first, then a set of node
coordinates chosen by the configured scan strategy:

* ``gs``      systematic sweep over every node,
* ``rsg``     V sub-iterations, each refreshing one node drawn with
              uniform probabilities,
* ``mrsg``    a random subset, each node included independently with its
              selection probability (redrawn if empty),
* ``amrsg``   mrsg with acceptance-driven adaptation of the selection
              probabilities,
* ``b-mrsg`` / ``b-amrsg``  block versions: whole blocks of a node
              partition are selected, with L1-normalized probabilities.

Within a sweep, nodes are visited in ascending order and time slices in
ascending order within a node, so ``mrsg`` with q = 1 reproduces the
systematic sweep draw for draw. Selection, proposal noise and
initialization consume three independent RNG streams derived from the
chain seed, which makes that equivalence exact under a shared seed.

A single chain is strictly sequential; concurrency lives one level up,
across replications, with seeds derived per replication.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import pandas as pd

from . import kernels
from .lscore import LatentState, PriorSpec
from .netdata import NetworkTensor
from .proposals import ProposalState, _propose_with_noise, adapt as adapt_proposal
from .scan import (
    BlockPartition,
    ScanPlan,
    SelectionProbs,
    build_partition_heuristic,
    damping_coefficient,
    draw_index_set,
    normalize_block_probs,
)

__all__ = [
    "AmhSettings",
    "ChainConfig",
    "ChainTrace",
    "mh_accept",
    "step_alpha",
    "step_nodes",
    "run_chain",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AmhSettings:
    """Adaptive MH knobs shared by every target of a chain."""

    variant: str = "global"
    psi: float = 0.6
    beta: float = 0.05
    v: int = 50
    delta0: float = 0.1


@dataclass(frozen=True)
class ChainConfig:
    """Everything needed to run one chain, apart from data and prior."""

    iterations: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    scan: ScanPlan = field(default_factory=ScanPlan)
    amh: AmhSettings = field(default_factory=AmhSettings)
    target: float = 0.234
    recenter_every: int = 10
    sub_iterations: int | None = None  # V, "rsg" only; defaults to n_nodes

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in <= self.iterations:
            raise ValueError("burn_in must lie in [0, iterations]")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if not 0 < self.target < 1:
            raise ValueError("target acceptance rate must lie in (0, 1)")
        if self.recenter_every < 0:
            raise ValueError("recenter_every must be >= 0 (0 disables)")
        if self.sub_iterations is not None and self.sub_iterations < 1:
            raise ValueError("sub_iterations must be positive")

    @property
    def n_kept(self) -> int:
        return (self.iterations - self.burn_in) // self.thinning


@dataclass
class ChainTrace:
    """Stored draws, acceptance and adaptation history of one chain.

    ``alpha_draws`` has shape (kept, R, T); ``coord_draws`` shape
    (kept, d, N, T). Acceptance arrays cover every iteration, with NaN
    where a node was not selected. ``q_history`` holds the selection
    probabilities after each adaptation step (adaptive strategies only).
    """

    alpha_draws: np.ndarray
    coord_draws: np.ndarray
    accept_alpha: np.ndarray
    accept_nodes: np.ndarray
    q_history: np.ndarray
    q_iterations: np.ndarray
    kept_iterations: np.ndarray
    wall_time_seconds: float
    seed: int
    strategy: str
    config: dict

    def save(self, out_dir) -> None:
        """Write the trace as CSV files plus meta.json (1-based indices)."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        kept, n_layers, n_times = self.alpha_draws.shape
        _, dim, n_nodes, _ = self.coord_draws.shape

        it, r, t = np.meshgrid(self.kept_iterations, np.arange(n_layers) + 1,
                               np.arange(n_times) + 1, indexing="ij")
        pd.DataFrame({
            "iter": it.ravel(), "r": r.ravel(), "t": t.ravel(),
            "value": self.alpha_draws.ravel(),
        }).to_csv(out / "alpha.csv", index=False, float_format="%.17g")

        it, k, i, t = np.meshgrid(self.kept_iterations, np.arange(dim) + 1,
                                  np.arange(n_nodes) + 1, np.arange(n_times) + 1,
                                  indexing="ij")
        pd.DataFrame({
            "iter": it.ravel(), "node": i.ravel(), "t": t.ravel(),
            "dim": k.ravel(), "value": self.coord_draws.ravel(),
        }).to_csv(out / "coords.csv", index=False, float_format="%.17g")

        frames = []
        it, r, t = np.meshgrid(np.arange(self.accept_alpha.shape[0]) + 1,
                               np.arange(n_layers) + 1, np.arange(n_times) + 1,
                               indexing="ij")
        frames.append(pd.DataFrame({
            "iter": it.ravel(), "kind": "alpha", "index": r.ravel(),
            "t": t.ravel(), "value": self.accept_alpha.ravel(),
        }))
        sel = ~np.isnan(self.accept_nodes)
        it, i, t = np.nonzero(sel)
        frames.append(pd.DataFrame({
            "iter": it + 1, "kind": "node", "index": i + 1, "t": t + 1,
            "value": self.accept_nodes[sel],
        }))
        pd.concat(frames, ignore_index=True).to_csv(out / "accept.csv", index=False, float_format="%.17g")

        if self.q_history.size:
            it, k = np.meshgrid(self.q_iterations, np.arange(self.q_history.shape[1]) + 1,
                                indexing="ij")
            qdf = pd.DataFrame({
                "iter": it.ravel(), "target": k.ravel(), "value": self.q_history.ravel(),
            })
        else:
            qdf = pd.DataFrame(columns=["iter", "target", "value"])
        qdf.to_csv(out / "qprobs.csv", index=False, float_format="%.17g")

        meta = {
            "seed": int(self.seed),
            "strategy": self.strategy,
            "wall_time_seconds": self.wall_time_seconds,
            "kernel_backend": kernels.BACKEND,
            "shape": {"kept": kept, "dim": dim, "n_nodes": n_nodes,
                      "n_layers": n_layers, "n_times": n_times,
                      "iterations": int(self.accept_alpha.shape[0])},
            "config": self.config,
        }
        (out / "meta.json").write_text(json.dumps(meta, indent=2, default=float))

    @classmethod
    def load(cls, trace_dir) -> "ChainTrace":
        src = Path(trace_dir)
        meta = json.loads((src / "meta.json").read_text())
        sh = meta["shape"]
        kept, dim, n_nodes = sh["kept"], sh["dim"], sh["n_nodes"]
        n_layers, n_times, iterations = sh["n_layers"], sh["n_times"], sh["iterations"]

        adf = pd.read_csv(src / "alpha.csv", float_precision="round_trip")
        alpha = adf["value"].to_numpy().reshape(kept, n_layers, n_times)
        kept_iters = adf["iter"].to_numpy().reshape(kept, n_layers, n_times)[:, 0, 0]
        cdf = pd.read_csv(src / "coords.csv", float_precision="round_trip")
        coords = cdf["value"].to_numpy().reshape(kept, dim, n_nodes, n_times)

        acc = pd.read_csv(src / "accept.csv", float_precision="round_trip")
        accept_alpha = np.full((iterations, n_layers, n_times), np.nan)
        accept_nodes = np.full((iterations, n_nodes, n_times), np.nan)
        al = acc[acc["kind"] == "alpha"]
        accept_alpha[al["iter"] - 1, al["index"] - 1, al["t"] - 1] = al["value"]
        nd = acc[acc["kind"] == "node"]
        accept_nodes[nd["iter"] - 1, nd["index"] - 1, nd["t"] - 1] = nd["value"]

        qdf = pd.read_csv(src / "qprobs.csv", float_precision="round_trip")
        if len(qdf):
            q_iters = np.unique(qdf["iter"].to_numpy())
            n_targets = int(qdf["target"].max())
            q_hist = qdf["value"].to_numpy().reshape(len(q_iters), n_targets)
        else:
            q_iters = np.empty(0, dtype=np.int64)
            q_hist = np.empty((0, 0))

        return cls(alpha_draws=alpha, coord_draws=coords,
                   accept_alpha=accept_alpha, accept_nodes=accept_nodes,
                   q_history=q_hist, q_iterations=q_iters,
                   kept_iterations=kept_iters,
                   wall_time_seconds=meta["wall_time_seconds"],
                   seed=meta["seed"], strategy=meta["strategy"],
                   config=meta["config"])


def _accept_prob(log_ratio: float) -> float:
    """min(1, exp(log_ratio)); NaN rejects with a warning."""
    if math.isnan(log_ratio):
        logger.warning("NaN log-posterior ratio encountered; rejecting proposal")
        return 0.0
    return math.exp(log_ratio) if log_ratio < 0.0 else 1.0


def mh_accept(logpost_candidate: float, logpost_current: float,
              log_q_ratio: float, rng: np.random.Generator):
    """One Metropolis-Hastings decision.

    Returns (accepted, accept_prob) with accept_prob the instantaneous
    acceptance probability min(1, exp(delta + log_q_ratio)). Symmetric
    proposals pass log_q_ratio = 0.
    """
    a = _accept_prob(logpost_candidate - logpost_current + log_q_ratio)
    return bool(rng.random() < a), a


class _Runtime:
    """Mutable working set of one chain: dense data, state, proposals.

    Hot-path layouts differ from the public types: coordinates are held
    as (T, N, d) so each time slice is a C-contiguous (N, d) block for
    the kernels, and weights as the dense (R, T, N, N) tensor plus flat
    upper-triangle pair arrays per (layer, time) for the intercept step.
    """

    def __init__(self, net: NetworkTensor, prior: PriorSpec):
        self.net = net
        self.prior = prior
        self.squared = prior.distance == "sq_euclidean"
        self.W = np.ascontiguousarray(net.dense)
        self.fams = np.asarray([f.code for f in net.families], dtype=np.int64)
        iu, ju = np.triu_indices(net.n_nodes, 1)
        self.ypairs = np.ascontiguousarray(self.W[:, :, iu, ju])  # (R, T, P)
        self.coords: np.ndarray | None = None  # (T, N, d)
        self.alphas: np.ndarray | None = None  # (R, T)
        self.alpha_ps: list[list[ProposalState]] = []
        self.node_ps: list[list[ProposalState]] = []

    # -- state plumbing -------------------------------------------------

    def init_state(self, dim: int, rng: np.random.Generator) -> None:
        """Coordinates from the prior (random walk across slices), intercepts
        at their prior mean."""
        n, T = self.net.n_nodes, self.net.n_times
        coords = np.empty((T, n, dim))
        coords[0] = math.sqrt(self.prior.sigma2) * rng.standard_normal((n, dim))
        for t in range(1, T):
            coords[t] = coords[t - 1] + math.sqrt(self.prior.sigma2_eps) * rng.standard_normal((n, dim))
        self.coords = coords
        self.alphas = np.full((self.net.n_layers, T), self.prior.alpha_prior_mean)

    def set_state(self, state: LatentState) -> None:
        self.coords = np.ascontiguousarray(state.coords.transpose(2, 1, 0))
        self.alphas = state.alphas.copy()

    def get_state(self) -> LatentState:
        return LatentState(self.coords.transpose(2, 1, 0).copy(), self.alphas.copy())

    def make_proposals(self, amh: AmhSettings, target: float, dim: int) -> None:
        def _mk(d):
            return ProposalState(dim=d, variant=amh.variant, scale=amh.delta0,
                                 psi=amh.psi, beta=amh.beta, period=amh.v,
                                 target=target)
        R, T, N = self.net.n_layers, self.net.n_times, self.net.n_nodes
        self.alpha_ps = [[_mk(1) for _ in range(T)] for _ in range(R)]
        self.node_ps = [[_mk(dim) for _ in range(T)] for _ in range(N)]

    # -- sweep steps ----------------------------------------------------

    def step_alpha(self, rng: np.random.Generator) -> np.ndarray:
        """One adaptive MH update of every intercept; returns (R, T)
        acceptance probabilities."""
        R, T = self.alphas.shape
        haario = self.alpha_ps[0][0].variant == "haario"
        Z = rng.standard_normal((R, T))
        U = rng.random((R, T))
        SEL = rng.random((R, T)) if haario else None
        dists = [kernels.pair_dists(self.coords[t], self.squared) for t in range(T)]
        acc = np.empty((R, T))
        inv_var = 1.0 / self.prior.alpha_prior_var
        mean = self.prior.alpha_prior_mean
        fams = self.fams
        for r in range(R):
            for t in range(T):
                ps = self.alpha_ps[r][t]
                cur = self.alphas[r, t]
                cand = float(_propose_with_noise(
                    ps, np.array([cur]), Z[r, t:t + 1],
                    SEL[r, t] if haario else None)[0])
                ll_cur = kernels.pairs_loglik(self.ypairs[r, t], fams[r], cur, dists[t])
                ll_cand = kernels.pairs_loglik(self.ypairs[r, t], fams[r], cand, dists[t])
                dprior = -0.5 * ((cand - mean) ** 2 - (cur - mean) ** 2) * inv_var
                a = _accept_prob(ll_cand - ll_cur + dprior)
                if U[r, t] < a:
                    self.alphas[r, t] = cand
                acc[r, t] = a
                adapt_proposal(ps, a, self.alphas[r, t:t + 1])
        return acc

    def _node_prior_delta(self, i: int, t: int, x_new: np.ndarray) -> float:
        coords = self.coords
        x_old = coords[t, i]
        T = coords.shape[0]
        quad = 0.0
        if t == 0:
            quad -= 0.5 * (np.dot(x_new, x_new) - np.dot(x_old, x_old)) / self.prior.sigma2
        else:
            prev = coords[t - 1, i]
            dn = x_new - prev
            do = x_old - prev
            quad -= 0.5 * (np.dot(dn, dn) - np.dot(do, do)) / self.prior.sigma2_eps
        if t < T - 1:
            nxt = coords[t + 1, i]
            dn = nxt - x_new
            do = nxt - x_old
            quad -= 0.5 * (np.dot(dn, dn) - np.dot(do, do)) / self.prior.sigma2_eps
        return quad

    def step_nodes(self, nodes, rng: np.random.Generator) -> np.ndarray:
        """Adaptive MH updates of the selected nodes' coordinates at every
        time slice; returns (len(nodes), T) acceptance probabilities."""
        nodes = np.asarray(nodes)
        M = nodes.shape[0]
        T, _n, d = self.coords.shape
        haario = self.node_ps[int(nodes[0])][0].variant == "haario"
        Z = rng.standard_normal((M, T, d))
        U = rng.random((M, T))
        SEL = rng.random((M, T)) if haario else None
        acc = np.empty((M, T))
        W, fams, alphas, squared = self.W, self.fams, self.alphas, self.squared
        delta = kernels.node_loglik_delta
        for m in range(M):
            i = int(nodes[m])
            for t in range(T):
                ps = self.node_ps[i][t]
                Xt = self.coords[t]
                cand = _propose_with_noise(ps, Xt[i], Z[m, t],
                                           SEL[m, t] if haario else None)
                logr = delta(W[:, t], fams, alphas[:, t], Xt, i, cand, squared)
                logr += self._node_prior_delta(i, t, cand)
                a = _accept_prob(logr)
                if U[m, t] < a:
                    Xt[i] = cand
                acc[m, t] = a
                adapt_proposal(ps, a, Xt[i])
        return acc

    def recenter(self) -> None:
        self.coords -= self.coords.mean(axis=1, keepdims=True)


def step_alpha(state: LatentState, net: NetworkTensor, prior: PriorSpec,
               proposal_states: dict, rng: np.random.Generator) -> np.ndarray:
    """Public wrapper over the intercept sweep; mutates ``state`` and the
    proposal states (keyed ``(r, t)``). Returns (R, T) acceptance probs."""
    rt = _Runtime(net, prior)
    rt.set_state(state)
    rt.alpha_ps = [[proposal_states[(r, t)] for t in range(net.n_times)]
                   for r in range(net.n_layers)]
    acc = rt.step_alpha(rng)
    state.alphas[:] = rt.alphas
    return acc


def step_nodes(state: LatentState, net: NetworkTensor, prior: PriorSpec,
               proposal_states: dict, index_set, rng: np.random.Generator) -> np.ndarray:
    """Public wrapper over the node sweep for an ascending, non-empty
    ``index_set``; proposal states are keyed ``(i, t)``."""
    idx = np.asarray(index_set)
    if idx.size == 0:
        raise ValueError("index_set must be non-empty")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("index_set must be strictly ascending")
    for i in idx:
        for t in range(net.n_times):
            if (int(i), t) not in proposal_states:
                raise KeyError(f"missing proposal state for node {i}, time {t}")
    rt = _Runtime(net, prior)
    rt.set_state(state)
    rt.node_ps = [[proposal_states.get((i, t)) for t in range(net.n_times)]
                  for i in range(net.n_nodes)]
    acc = rt.step_nodes(idx, rng)
    state.coords[:] = rt.coords.transpose(2, 1, 0)
    return acc


def _validate(net: NetworkTensor, cfg: ChainConfig) -> None:
    plan = cfg.scan
    if plan.is_block:
        k = plan.partition.n_blocks if plan.partition is not None else plan.n_blocks
        if not 1 <= k <= net.n_nodes:
            raise ValueError(f"block count {k} out of range for {net.n_nodes} nodes")
        if plan.partition is not None and plan.partition.assignment.shape[0] != net.n_nodes:
            raise ValueError("partition does not cover the node set")
    if cfg.sub_iterations is not None and plan.strategy != "rsg":
        logger.info("sub_iterations is only used by the rsg strategy; ignoring")


def run_chain(net: NetworkTensor, prior: PriorSpec, cfg: ChainConfig,
              seed: int | None = None, dim: int = 2,
              init_state: LatentState | None = None) -> ChainTrace:
    """Run one chain and return its trace.

    Deterministic: identical (net, prior, cfg, seed) give a bit-identical
    trace. ``seed`` overrides ``cfg.seed``; ``init_state`` overrides the
    prior draw used to initialize the chain.
    """
    _validate(net, cfg)
    seed = cfg.seed if seed is None else seed
    init_ss, scan_ss, prop_ss = np.random.SeedSequence(seed).spawn(3)
    init_rng = np.random.default_rng(init_ss)
    scan_rng = np.random.default_rng(scan_ss)
    prop_rng = np.random.default_rng(prop_ss)

    t0 = time.perf_counter()
    rt = _Runtime(net, prior)
    if init_state is not None:
        rt.set_state(init_state)
        dim = init_state.dim
    else:
        rt.init_state(dim, init_rng)
    rt.make_proposals(cfg.amh, cfg.target, dim)

    plan = cfg.scan
    N, T, R = net.n_nodes, net.n_times, net.n_layers
    strategy = plan.strategy

    partition: BlockPartition | None = None
    selection: SelectionProbs | None = None
    if plan.is_block:
        partition = plan.partition or build_partition_heuristic(net, plan.n_blocks)
        members = [partition.members(k) for k in range(partition.n_blocks)]
        selection = SelectionProbs(np.full(partition.n_blocks, plan.q0), plan.epsilon)
    elif strategy in ("mrsg", "amrsg"):
        selection = SelectionProbs(np.full(N, plan.q0), plan.epsilon)
    V = cfg.sub_iterations or N

    H, n_kept = cfg.iterations, cfg.n_kept
    alpha_draws = np.empty((n_kept, R, T))
    coord_draws = np.empty((n_kept, dim, N, T))
    kept_iterations = np.empty(n_kept, dtype=np.int64)
    accept_alpha = np.empty((H, R, T))
    accept_nodes = np.full((H, N, T), np.nan)
    q_history: list[np.ndarray] = []
    q_iterations: list[int] = []

    all_nodes = np.arange(N)
    kept = 0
    for h in range(1, H + 1):
        accept_alpha[h - 1] = rt.step_alpha(prop_rng)

        if strategy == "gs":
            acc = rt.step_nodes(all_nodes, prop_rng)
            accept_nodes[h - 1, :, :] = acc
        elif strategy == "rsg":
            for _v in range(V):
                i = int(scan_rng.integers(N))
                accept_nodes[h - 1, i, :] = rt.step_nodes(np.array([i]), prop_rng)[0]
        elif plan.is_block:
            q_draw = normalize_block_probs(selection.q)
            blocks = draw_index_set(q_draw, scan_rng)
            nodes = np.concatenate([members[k] for k in blocks])
            acc = rt.step_nodes(nodes, prop_rng)
            accept_nodes[h - 1, nodes, :] = acc
            block_means = np.array([
                np.nanmean(accept_nodes[h - 1, members[k], :]) for k in blocks])
            selection.record(blocks, block_means)
        else:  # mrsg / amrsg
            nodes = draw_index_set(selection.q, scan_rng)
            acc = rt.step_nodes(nodes, prop_rng)
            accept_nodes[h - 1, nodes, :] = acc
            selection.record(nodes, acc.mean(axis=1))

        if cfg.recenter_every and h % cfg.recenter_every == 0:
            rt.recenter()

        if plan.is_adaptive and h % plan.u == 0:
            selection.adapt(cfg.target, plan.c, damping_coefficient(plan.damping, h))
            q_history.append(selection.q.copy())
            q_iterations.append(h)

        if h > cfg.burn_in and (h - cfg.burn_in) % cfg.thinning == 0:
            alpha_draws[kept] = rt.alphas
            coord_draws[kept] = rt.coords.transpose(2, 1, 0)
            kept_iterations[kept] = h
            kept += 1

    wall = time.perf_counter() - t0
    q_hist = np.asarray(q_history) if q_history else np.empty((0, 0))
    return ChainTrace(
        alpha_draws=alpha_draws, coord_draws=coord_draws,
        accept_alpha=accept_alpha, accept_nodes=accept_nodes,
        q_history=q_hist,
        q_iterations=np.asarray(q_iterations, dtype=np.int64),
        kept_iterations=kept_iterations,
        wall_time_seconds=wall, seed=seed, strategy=strategy,
        config=_config_dict(cfg),
    )


def _config_dict(cfg: ChainConfig) -> dict:
    out = asdict(cfg)
    out["scan"].pop("partition", None)
    return out
