"""Replicated benchmark harness comparing scan strategies.

Runs a roster of sampler configurations repeatedly on one synthetic
network, computes per-replication diagnostics, and aggregates them into
plot-ready tables. Replications are scheduled across processes with
deterministically derived seeds, so the statistical columns of the
output are reproducible byte for byte; wall-time columns depend on the
machine and are excluded from any determinism guarantee. When the
harness runs concurrently it re-times each algorithm once, solo, to get
contention-free timing medians.
"""

from __future__ import annotations

import json
import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import kernels
from .diag import chain_variance, ess, mse
from .lscore import PriorSpec
from .netdata import load_network
from .sampler import AmhSettings, ChainConfig, run_chain
from .scan import ScanPlan
from .synth import DgpSpec, load_truth, make_dataset, read_meta

__all__ = ["ROSTER", "algorithm_plan", "BenchSpec", "run_bench", "scaling_curve"]

logger = logging.getLogger(__name__)

#: Benchmark roster: systematic sweep, fixed multiple random scans at
#: q = 0.25 / 0.5, the adaptive scan, and the block versions with 2 and
#: 4 strength-quantile blocks. Selection probabilities of the adaptive
#: entries update every 100 iterations with shift c = 0 (undamped).
ROSTER = (
    "gs",
    "mrsg_0.25",
    "mrsg_0.5",
    "amrsg",
    "b-mrsg_2",
    "b-mrsg_4",
    "b-amrsg_2",
    "b-amrsg_4",
)


def algorithm_plan(label: str) -> ScanPlan:
    """ScanPlan for one roster label."""
    if label == "gs":
        return ScanPlan(strategy="gs")
    if label == "rsg":
        return ScanPlan(strategy="rsg")
    if label.startswith("mrsg_"):
        return ScanPlan(strategy="mrsg", q0=float(label.split("_", 1)[1]))
    if label == "amrsg":
        return ScanPlan(strategy="amrsg", q0=0.5, u=100, c=0.0, damping="none")
    if label.startswith("b-mrsg_"):
        k = int(label.split("_", 1)[1])
        return ScanPlan(strategy="b-mrsg", q0=1.0 / k, n_blocks=k)
    if label.startswith("b-amrsg_"):
        k = int(label.split("_", 1)[1])
        return ScanPlan(strategy="b-amrsg", q0=1.0 / k, n_blocks=k,
                        u=100, c=0.0, damping="none")
    raise ValueError(f"unknown algorithm label {label!r}")


@dataclass(frozen=True)
class BenchSpec:
    """One benchmark campaign.

    The dataset comes either from a synthetic generator (``dgp``) or
    from files (``network_path`` + ``meta_path``; ``truth_path`` enables
    the error metrics against known generating values).
    """

    dgp: DgpSpec | None = None
    network_path: str | None = None
    meta_path: str | None = None
    truth_path: str | None = None
    algorithms: tuple = ROSTER
    replications: int = 20
    iterations: int = 5000
    burn_in: int = 0
    thinning: int = 1
    dim: int = 2
    master_seed: int = 0
    concurrency: int | None = None  # None = available parallelism
    regenerate_networks: bool = False
    save_traces: str = "first"  # "first" | "all" | "none"
    amh: AmhSettings = field(default_factory=AmhSettings)
    target: float = 0.234
    recenter_every: int = 10

    def __post_init__(self):
        if (self.dgp is None) == (self.network_path is None):
            raise ValueError("exactly one of dgp or network_path must be given")
        if self.network_path is not None and self.meta_path is None:
            raise ValueError("network_path requires meta_path")
        if self.regenerate_networks and self.dgp is None:
            raise ValueError("regenerate_networks requires a synthetic dgp")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not self.algorithms:
            raise ValueError("need at least one algorithm")
        for label in self.algorithms:
            algorithm_plan(label)
        if self.save_traces not in ("first", "all", "none"):
            raise ValueError("save_traces must be first, all or none")

    @property
    def latent_dim(self) -> int:
        return self.dgp.dim if self.dgp is not None else self.dim


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _chain_config(spec: BenchSpec, label: str, seed: int) -> ChainConfig:
    return ChainConfig(
        iterations=spec.iterations, burn_in=spec.burn_in, thinning=spec.thinning,
        seed=seed, scan=algorithm_plan(label), amh=spec.amh, target=spec.target,
        recenter_every=spec.recenter_every,
    )


def chain_metrics(trace, truth=None) -> dict:
    """Per-replication summary of one trace.

    Coordinate ESS / MSE / variance are averaged across nodes and times
    for each latent dimension and then across dimensions (grand mean).
    MSE columns require the generating ``truth`` and are omitted
    otherwise.
    """
    kept, dim = trace.coord_draws.shape[0], trace.coord_draws.shape[1]
    n_nodes, n_times = trace.coord_draws.shape[2], trace.coord_draws.shape[3]
    ess_dims, mse_dims, var_dims = [], [], []
    for k in range(dim):
        vals_e, vals_m, vals_v = [], [], []
        for i in range(n_nodes):
            for t in range(n_times):
                chain = trace.coord_draws[:, k, i, t]
                vals_e.append(ess(chain))
                vals_v.append(chain_variance(chain))
                if truth is not None:
                    vals_m.append(mse(chain, truth.coords[k, i, t]))
        ess_dims.append(np.mean(vals_e))
        var_dims.append(np.mean(vals_v))
        if truth is not None:
            mse_dims.append(np.mean(vals_m))
    alpha_ess = np.mean([
        ess(trace.alpha_draws[:, r, t])
        for r in range(trace.alpha_draws.shape[1])
        for t in range(trace.alpha_draws.shape[2])
    ])
    out = {
        "ess_mean": float(np.mean(ess_dims)),
        "ess_fraction": float(np.mean(ess_dims) / kept),
        "variance_mean": float(np.mean(var_dims)),
        "alpha_ess_mean": float(alpha_ess),
        "wall_time_seconds": trace.wall_time_seconds,
    }
    for k in range(dim):
        out[f"ess_dim{k + 1}"] = float(ess_dims[k])
        out[f"variance_dim{k + 1}"] = float(var_dims[k])
    out["precision_per_second"] = 1.0 / (out["variance_mean"] * out["wall_time_seconds"])
    if truth is not None:
        out["mse_mean"] = float(np.mean(mse_dims))
        for k in range(dim):
            out[f"mse_dim{k + 1}"] = float(mse_dims[k])
        out["mse_time"] = out["mse_mean"] * out["wall_time_seconds"]
    return out


def _load_dataset(spec: BenchSpec, rep: int):
    """(network, truth-or-None) for one replication."""
    if spec.dgp is not None:
        dgp_seed = _derive_seed(spec.master_seed, 10**6,
                                rep if spec.regenerate_networks else 0)
        return make_dataset(spec.dgp, dgp_seed)
    meta = read_meta(spec.meta_path)
    net = load_network(
        spec.network_path, meta.get("format", "edgelist"),
        families=meta["families"], n_nodes=meta["n_nodes"],
        n_layers=meta.get("n_layers"), n_times=meta.get("n_times"),
    )
    truth = load_truth(spec.truth_path) if spec.truth_path else None
    return net, truth


def _run_task(args) -> dict:
    """One (algorithm, replication) cell; returns a per_rep row."""
    spec, label, rep, trace_dir = args
    net, truth = _load_dataset(spec, rep)
    chain_seed = _derive_seed(spec.master_seed, rep)
    cfg = _chain_config(spec, label, chain_seed)
    row = {"algorithm": label, "replication": rep, "seed": chain_seed, "error": ""}
    try:
        trace = run_chain(net, prior_for(spec), cfg, dim=spec.latent_dim)
        row.update(chain_metrics(trace, truth))
        if trace_dir is not None:
            trace.save(trace_dir)
    except Exception as exc:  # recorded per replication, batch continues
        logger.error("replication %d of %s failed: %s", rep, label, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["traceback"] = traceback.format_exc()
    return row


def prior_for(spec: BenchSpec) -> PriorSpec:
    """Fitting prior matched to the generator's dynamics."""
    eps = spec.dgp.sigma2_eps if spec.dgp is not None and spec.dgp.n_times > 1 else 0.01
    return PriorSpec(sigma2=1.0, sigma2_eps=max(eps, 1e-8), distance="sq_euclidean")


_TIME_COLUMNS = ("wall_time_seconds", "mse_time", "precision_per_second")


def run_bench(spec: BenchSpec, out_dir=None):
    """Execute the campaign; returns (aggregate, per_rep) DataFrames.

    Writes aggregate.csv, per_rep.csv, report.json and trace
    subdirectories under ``out_dir`` when given. Failures are recorded
    per replication without aborting the batch.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    tasks = []
    for label in spec.algorithms:
        for rep in range(spec.replications):
            trace_dir = None
            if out is not None and (
                spec.save_traces == "all" or (spec.save_traces == "first" and rep == 0)
            ):
                trace_dir = out / "traces" / label / f"rep{rep:03d}"
            tasks.append((spec, label, rep, trace_dir))

    workers = spec.concurrency or min(os.cpu_count() or 1, len(tasks))
    if workers <= 1:
        rows = [_run_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_task, tasks))

    per_rep = pd.DataFrame(rows)
    failed = per_rep[per_rep["error"] != ""]
    ok = per_rep[per_rep["error"] == ""].drop(columns=["traceback"], errors="ignore")

    solo_times = {}
    if workers > 1:
        # contention-free timing pass, one solo run per algorithm
        for label in spec.algorithms:
            solo_times[label] = _run_task((spec, label, 0, None)).get(
                "wall_time_seconds", float("nan"))

    metric_cols = [c for c in ok.columns
                   if c not in ("algorithm", "replication", "seed", "error")]
    groups = ok.groupby("algorithm", sort=False)
    agg_frames = {}
    for stat, fn in (("median", "median"), ("q25", lambda s: s.quantile(0.25)),
                     ("q75", lambda s: s.quantile(0.75))):
        stat_df = groups[metric_cols].agg(fn)
        agg_frames.update({f"{c}_{stat}": stat_df[c] for c in metric_cols})
    aggregate = pd.DataFrame(agg_frames).reset_index()
    aggregate.insert(1, "replications_ok", groups.size().reindex(aggregate["algorithm"]).values)
    if solo_times:
        aggregate["wall_time_solo_seconds"] = aggregate["algorithm"].map(solo_times)

    if out is not None:
        aggregate.to_csv(out / "aggregate.csv", index=False)
        per_rep.drop(columns=["traceback"], errors="ignore").to_csv(
            out / "per_rep.csv", index=False)
        report = {
            "algorithms": list(spec.algorithms),
            "replications": spec.replications,
            "iterations": spec.iterations,
            "master_seed": spec.master_seed,
            "kernel_backend": kernels.BACKEND,
            "workers": workers,
            "failures": failed[["algorithm", "replication", "error"]].to_dict("records"),
            "note": "wall-time columns are environment-dependent; all other "
                    "columns are deterministic given the spec and master seed",
        }
        (out / "report.json").write_text(json.dumps(report, indent=2, default=float))
    if len(failed):
        logger.warning("%d replication(s) failed", len(failed))
    return aggregate, per_rep


def scaling_curve(spec: BenchSpec, node_grid, reps_per_size: int = 3,
                  out_dir=None) -> pd.DataFrame:
    """Median solo wall time per algorithm for each network size.

    Runs are strictly sequential: this is a timing measurement. The node
    grid must be ascending.
    """
    grid = list(node_grid)
    if grid != sorted(grid):
        raise ValueError("node grid must be ascending")
    if spec.dgp is None:
        raise ValueError("scaling_curve needs a synthetic dgp to resize")
    rows = []
    for n in grid:
        sized = replace(spec, dgp=replace(spec.dgp, n_nodes=int(n)))
        dgp_seed = _derive_seed(sized.master_seed, 10**6, 0)
        net, _truth = make_dataset(sized.dgp, dgp_seed)
        prior = prior_for(sized)
        for label in spec.algorithms:
            times = []
            for rep in range(reps_per_size):
                cfg = _chain_config(sized, label, _derive_seed(sized.master_seed, rep))
                trace = run_chain(net, prior, cfg, dim=sized.latent_dim)
                times.append(trace.wall_time_seconds)
            rows.append({"n_nodes": int(n), "algorithm": label,
                         "median_seconds": float(np.median(times)),
                         "runs": reps_per_size})
    table = pd.DataFrame(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / "scaling.csv", index=False)
    return table
