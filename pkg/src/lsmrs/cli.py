"""Command-line surface.

Subcommands: ``generate`` (synthetic data), ``fit`` (run one chain),
``diagnose`` (trace diagnostics), ``bench`` (replicated comparison of
scan strategies) and ``scaling`` (timing versus network size).

Settings come from a JSON config file with dotted keys (for example
``{"scan.strategy": "amrsg", "amh.psi": 0.6}``), overridable per key on
the command line via repeated ``--set key=value`` flags. Exit codes:
0 success, 1 configuration error, 2 data error, 3 runtime failure in at
least one replication.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import kernels
from .bench import ROSTER, BenchSpec, run_bench, scaling_curve
from .diag import report_from_trace
from .lscore import PriorSpec
from .netdata import NetworkDataError, load_network, save_network
from .sampler import AmhSettings, ChainConfig, ChainTrace, run_chain
from .scan import ScanPlan
from .synth import load_truth, make_dataset, preset, read_meta, save_truth, write_meta

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "chain.iterations": 5000,
    "chain.burn_in": 0,
    "chain.thinning": 1,
    "chain.seed": 0,
    "chain.recenter_every": 10,
    "chain.sub_iterations": None,
    "scan.strategy": "gs",
    "scan.q0": 0.5,
    "scan.u": 100,
    "scan.c": 0.0,
    "scan.epsilon": 0.01,
    "scan.K": None,
    "scan.partition_file": None,
    "scan.damping": "one_over_h",
    "amh.variant": "global",
    "amh.psi": 0.6,
    "amh.beta": 0.05,
    "amh.v": 50,
    "amh.delta0": 0.1,
    "amh.target": 0.234,
    "prior.sigma2": 1.0,
    "prior.sigma2_eps": 0.01,
    "prior.alpha_prior_mean": 0.0,
    "prior.alpha_prior_var": 100.0,
    "prior.distance": "sq_euclidean",
}


def _coerce(key: str, raw):
    """Parse a --set string value against the default's type."""
    if not isinstance(raw, str):
        return raw
    default = DEFAULTS[key]
    if default is None:
        # unset-by-default keys: integers (scan.K, chain.sub_iterations) or
        # paths; "none"/"null" clears them
        if raw.lower() in ("none", "null"):
            return None
        try:
            return int(raw)
        except ValueError:
            return raw
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def resolve_settings(config_path=None, overrides=()) -> dict:
    """Defaults, then config file, then --set overrides."""
    settings = dict(DEFAULTS)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        for key, value in loaded.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            settings[key] = value
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        settings[key] = _coerce(key, value)
    return settings


def build_chain_config(settings: dict, net=None) -> ChainConfig:
    try:
        partition = None
        pfile = settings["scan.partition_file"]
        if pfile:
            partition = _load_partition(pfile)
        scan = ScanPlan(
            strategy=settings["scan.strategy"],
            q0=float(settings["scan.q0"]),
            u=int(settings["scan.u"]),
            c=float(settings["scan.c"]),
            epsilon=float(settings["scan.epsilon"]),
            n_blocks=settings["scan.K"] and int(settings["scan.K"]),
            partition=partition,
            damping=settings["scan.damping"],
        )
        amh = AmhSettings(
            variant=settings["amh.variant"],
            psi=float(settings["amh.psi"]),
            beta=float(settings["amh.beta"]),
            v=int(settings["amh.v"]),
            delta0=float(settings["amh.delta0"]),
        )
        sub = settings["chain.sub_iterations"]
        return ChainConfig(
            iterations=int(settings["chain.iterations"]),
            burn_in=int(settings["chain.burn_in"]),
            thinning=int(settings["chain.thinning"]),
            seed=int(settings["chain.seed"]),
            scan=scan,
            amh=amh,
            target=float(settings["amh.target"]),
            recenter_every=int(settings["chain.recenter_every"]),
            sub_iterations=sub and int(sub),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def build_prior(settings: dict) -> PriorSpec:
    try:
        return PriorSpec(
            sigma2=float(settings["prior.sigma2"]),
            sigma2_eps=float(settings["prior.sigma2_eps"]),
            alpha_prior_mean=float(settings["prior.alpha_prior_mean"]),
            alpha_prior_var=float(settings["prior.alpha_prior_var"]),
            distance=settings["prior.distance"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_partition(path):
    from .scan import BlockPartition

    df = pd.read_csv(path)
    if not {"node", "block"} <= set(df.columns):
        raise ConfigError(f"partition file {path} needs columns node,block")
    assignment = np.zeros(int(df["node"].max()), dtype=np.int64)
    assignment[df["node"] - 1] = df["block"] - 1
    return BlockPartition(assignment=assignment, n_blocks=int(df["block"].max()))


def _add_common(p):
    p.add_argument("--config", help="JSON config file with dotted keys")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--out", required=True, help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsmrs",
        description="Random-scan MCMC for latent space network models "
                    f"(kernel backend: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a synthetic network with known truth")
    g.add_argument("--preset", required=True, help="circular-poisson, random-bernoulli "
                                                   "or multilayer-temporal")
    g.add_argument("--n-nodes", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="run one chain on a network file")
    f.add_argument("--network", required=True, help="edge-list CSV")
    f.add_argument("--meta", required=True, help="meta.json written by generate")
    f.add_argument("--dim", type=int, default=None, help="latent dimension "
                                                         "(default: from meta, else 2)")
    _add_common(f)

    d = sub.add_parser("diagnose", help="diagnostics for a saved trace")
    d.add_argument("--trace", required=True, help="trace directory written by fit")
    d.add_argument("--truth", default=None, help="truth.csv for error metrics")
    d.add_argument("--ks-window", type=int, default=500)
    d.add_argument("--ks-thin", type=int, default=10)
    d.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="replicated comparison of scan strategies")
    b.add_argument("--preset", default=None)
    b.add_argument("--n-nodes", type=int, default=None)
    b.add_argument("--network", default=None, help="fit a network file instead of a preset")
    b.add_argument("--meta", default=None)
    b.add_argument("--truth", default=None)
    b.add_argument("--algorithms", default=",".join(ROSTER),
                   help=f"comma-separated subset of {','.join(ROSTER)}")
    b.add_argument("--replications", type=int, default=20)
    b.add_argument("--iterations", type=int, default=5000)
    b.add_argument("--burn-in", type=int, default=0)
    b.add_argument("--thinning", type=int, default=1)
    b.add_argument("--master-seed", type=int, default=0)
    b.add_argument("--concurrency", type=int, default=None)
    b.add_argument("--regenerate-networks", action="store_true")
    b.add_argument("--save-traces", choices=("first", "all", "none"), default="first")
    b.add_argument("--dim", type=int, default=2)
    b.add_argument("--out", required=True)

    s = sub.add_parser("scaling", help="timing at increasing network size")
    s.add_argument("--preset", required=True)
    s.add_argument("--nodes", required=True, help="ascending comma-separated node counts")
    s.add_argument("--algorithms", default="gs,mrsg_0.5,amrsg")
    s.add_argument("--iterations", type=int, default=1000)
    s.add_argument("--reps-per-size", type=int, default=3)
    s.add_argument("--master-seed", type=int, default=0)
    s.add_argument("--out", required=True)
    return parser


def _cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = preset(args.preset, args.n_nodes)
    net, truth = make_dataset(spec, args.seed)
    save_network(net, out / "network.csv", "edgelist")
    save_truth(truth, out / "truth.csv")
    write_meta(net, out / "meta.json", dim=spec.dim,
               extra={"preset": args.preset, "seed": args.seed})
    print(f"wrote network.csv, truth.csv, meta.json to {out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    settings = resolve_settings(args.config, args.overrides)
    meta = read_meta(args.meta)
    net = load_network(args.network, meta.get("format", "edgelist"),
                       families=meta["families"], n_nodes=meta["n_nodes"],
                       n_layers=meta.get("n_layers"), n_times=meta.get("n_times"))
    cfg = build_chain_config(settings)
    prior = build_prior(settings)
    dim = args.dim or meta.get("dim", 2)
    trace = run_chain(net, prior, cfg, dim=dim)
    trace.save(args.out)
    print(f"{cfg.scan.strategy}: {cfg.iterations} iterations in "
          f"{trace.wall_time_seconds:.2f}s; trace written to {args.out}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    trace = ChainTrace.load(args.trace)
    truth = load_truth(args.truth) if args.truth else None
    report = report_from_trace(trace, truth, ks_window=args.ks_window,
                               ks_thin=args.ks_thin)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    for name in ("ess", "mse", "variance", "acceptance_means"):
        table = getattr(report, name)
        pd.DataFrame({"parameter": list(table), "value": list(table.values())}).to_csv(
            out / f"{name}.csv", index=False)
    print(f"report.json and metric CSVs written to {out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    if (args.preset is None) == (args.network is None):
        raise ConfigError("bench needs exactly one of --preset or --network")
    dgp = preset(args.preset, args.n_nodes) if args.preset else None
    if args.network and not args.meta:
        raise ConfigError("--network requires --meta")
    spec = BenchSpec(
        dgp=dgp, network_path=args.network, meta_path=args.meta,
        truth_path=args.truth,
        algorithms=tuple(a.strip() for a in args.algorithms.split(",") if a.strip()),
        replications=args.replications, iterations=args.iterations,
        burn_in=args.burn_in, thinning=args.thinning, dim=args.dim,
        master_seed=args.master_seed, concurrency=args.concurrency,
        regenerate_networks=args.regenerate_networks, save_traces=args.save_traces,
    )
    _aggregate, per_rep = run_bench(spec, args.out)
    n_failed = int((per_rep["error"] != "").sum())
    print(f"bench finished: {len(per_rep)} runs, {n_failed} failed; "
          f"outputs in {args.out}")
    return EXIT_RUNTIME if n_failed else EXIT_OK


def _cmd_scaling(args) -> int:
    try:
        grid = [int(v) for v in args.nodes.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --nodes: {exc}") from exc
    spec = BenchSpec(
        dgp=preset(args.preset),
        algorithms=tuple(a.strip() for a in args.algorithms.split(",") if a.strip()),
        replications=1, iterations=args.iterations, master_seed=args.master_seed,
    )
    table = scaling_curve(spec, grid, reps_per_size=args.reps_per_size,
                          out_dir=args.out)
    print(table.to_string(index=False))
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "fit": _cmd_fit,
    "diagnose": _cmd_diagnose,
    "bench": _cmd_bench,
    "scaling": _cmd_scaling,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NetworkDataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
