"""Synthetic network generators with known ground truth.

Two static layouts on the plane: nodes equally spaced on a circle of
fixed radius (paired with Poisson counts in the bundled preset) and
nodes drawn i.i.d. from their standard Gaussian prior (paired with
Bernoulli edges). The temporal variant starts from the circular layout
and lets coordinates follow a Gaussian random walk across time slices.
Edge weights are always simulated with the squared Euclidean distance
in the linear predictor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .lscore import LatentState
from .netdata import (
    BERNOULLI_LOGIT,
    POISSON_LOG,
    NetworkTensor,
    WeightFamily,
)

__all__ = [
    "DgpSpec",
    "PRESETS",
    "preset",
    "gen_coords",
    "simulate_weights",
    "make_dataset",
    "save_truth",
    "load_truth",
    "write_meta",
    "read_meta",
]

LAYOUTS = ("circle", "random_prior")


@dataclass(frozen=True)
class DgpSpec:
    """Data-generating process for one synthetic network.

    ``alphas`` is broadcast to shape (n_layers, n_times). The circular
    layout requires dim == 2; ``sigma2_eps`` drives the random walk when
    n_times > 1 (0 freezes the coordinates).
    """

    layout: str
    n_nodes: int
    families: tuple[WeightFamily, ...]
    alphas: tuple
    dim: int = 2
    n_layers: int = 1
    n_times: int = 1
    radius: float = 1.0
    sigma2_eps: float = 0.01

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}")
        if self.n_nodes < 2 or self.dim < 1:
            raise ValueError("need at least two nodes and one dimension")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.sigma2_eps < 0:
            raise ValueError("sigma2_eps must be non-negative")
        if self.layout == "circle" and self.dim != 2:
            raise ValueError("the circular layout is defined on the plane (dim=2)")
        if len(self.families) != self.n_layers:
            raise ValueError("one weight family per layer required")
        alphas = tuple(float(a) for a in np.ravel(self.alphas))
        if len(alphas) not in (1, self.n_layers, self.n_layers * self.n_times):
            raise ValueError("alphas must have 1, n_layers or n_layers*n_times entries")
        object.__setattr__(self, "alphas", alphas)

    @property
    def alpha_matrix(self) -> np.ndarray:
        """Intercepts broadcast to shape (n_layers, n_times)."""
        a = np.asarray(self.alphas)
        if a.size == 1:
            return np.full((self.n_layers, self.n_times), a[0])
        if a.size == self.n_layers:
            return np.repeat(a.reshape(-1, 1), self.n_times, axis=1)
        return a.reshape(self.n_layers, self.n_times)


PRESETS = {
    # 120-node static benchmarks: intercept 5, planar latent space.
    "circular-poisson": DgpSpec(
        layout="circle", n_nodes=120, families=(POISSON_LOG,), alphas=(5.0,)),
    "random-bernoulli": DgpSpec(
        layout="random_prior", n_nodes=120, families=(BERNOULLI_LOGIT,), alphas=(5.0,)),
    # Two layers (counts with intercept 6, binary with intercept 3),
    # three time slices, circular start, random-walk drift.
    "multilayer-temporal": DgpSpec(
        layout="circle", n_nodes=120, n_layers=2, n_times=3,
        families=(POISSON_LOG, BERNOULLI_LOGIT), alphas=(6.0, 3.0),
        sigma2_eps=0.01),
}


def preset(name: str, n_nodes: int | None = None) -> DgpSpec:
    """A bundled DGP, optionally rescaled to a different node count."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    spec = PRESETS[name]
    return spec if n_nodes is None else replace(spec, n_nodes=n_nodes)


def gen_coords(spec: DgpSpec, rng: np.random.Generator) -> np.ndarray:
    """True latent coordinates, shape (dim, n_nodes, n_times).

    Circle: equal angular spacing on the radius-r circle (deterministic,
    so the truth is reproducible). Random prior: i.i.d. standard normal.
    Later slices add N(0, sigma2_eps I) increments.
    """
    n, d, T = spec.n_nodes, spec.dim, spec.n_times
    coords = np.empty((d, n, T))
    if spec.layout == "circle":
        angles = 2.0 * np.pi * np.arange(n) / n
        coords[0, :, 0] = spec.radius * np.cos(angles)
        coords[1, :, 0] = spec.radius * np.sin(angles)
    else:
        coords[:, :, 0] = rng.standard_normal((d, n))
    sd = np.sqrt(spec.sigma2_eps)
    for t in range(1, T):
        coords[:, :, t] = coords[:, :, t - 1] + sd * rng.standard_normal((d, n))
    return coords


def simulate_weights(coords: np.ndarray, spec: DgpSpec,
                     rng: np.random.Generator) -> NetworkTensor:
    """Independent edge weights for every pair, layer and time.

    eta uses the squared Euclidean distance between the time-t
    coordinates; weights with value zero are left out of the sparse
    storage (absent pair = 0).
    """
    n, T = spec.n_nodes, spec.n_times
    if coords.shape != (spec.dim, n, T):
        raise ValueError(f"coords shape {coords.shape} does not match the spec")
    alpha = spec.alpha_matrix
    iu, ju = np.triu_indices(n, 1)
    weights: dict[tuple[int, int, int, int], float] = {}
    for t in range(T):
        xs = coords[:, :, t].T
        diff = xs[iu] - xs[ju]
        d2 = np.einsum("pk,pk->p", diff, diff)
        for r in range(spec.n_layers):
            eta = alpha[r, t] - d2
            if spec.families[r].kind == "poisson_log":
                y = rng.poisson(np.exp(eta)).astype(np.float64)
            else:
                y = (rng.random(eta.shape[0]) < 1.0 / (1.0 + np.exp(-eta))).astype(np.float64)
            for p in np.flatnonzero(y):
                weights[(int(iu[p]), int(ju[p]), r, t)] = float(y[p])
    return NetworkTensor(
        n_nodes=n, n_layers=spec.n_layers, n_times=T,
        families=spec.families, weights=weights,
    )


def make_dataset(spec: DgpSpec, seed: int) -> tuple[NetworkTensor, LatentState]:
    """Simulate one network together with its generating latent state."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    coords = gen_coords(spec, rng)
    net = simulate_weights(coords, spec, rng)
    truth = LatentState(coords, spec.alpha_matrix.copy())
    return net, truth


def save_truth(truth: LatentState, path) -> None:
    """Write generating values as CSV: kind,index,t,dim,value (1-based).

    ``kind`` is "coord" (index = node, dim = latent dimension) or
    "alpha" (index = layer, dim = 0 as a placeholder).
    """
    d, n, T = truth.coords.shape
    rows = []
    for k in range(d):
        for i in range(n):
            for t in range(T):
                rows.append(("coord", i + 1, t + 1, k + 1, truth.coords[k, i, t]))
    for r in range(truth.alphas.shape[0]):
        for t in range(T):
            rows.append(("alpha", r + 1, t + 1, 0, truth.alphas[r, t]))
    pd.DataFrame(rows, columns=["kind", "index", "t", "dim", "value"]).to_csv(
        path, index=False, float_format="%.17g")


def load_truth(path) -> LatentState:
    """Inverse of :func:`save_truth`."""
    df = pd.read_csv(path, float_precision="round_trip")
    co = df[df["kind"] == "coord"]
    al = df[df["kind"] == "alpha"]
    d, n, T = int(co["dim"].max()), int(co["index"].max()), int(df["t"].max())
    coords = np.zeros((d, n, T))
    coords[co["dim"] - 1, co["index"] - 1, co["t"] - 1] = co["value"]
    alphas = np.zeros((int(al["index"].max()), T))
    alphas[al["index"] - 1, al["t"] - 1] = al["value"]
    return LatentState(coords, alphas)


def write_meta(net: NetworkTensor, path, *, fmt: str = "edgelist",
               dim: int | None = None, extra: dict | None = None) -> None:
    """Sidecar JSON describing a saved network (shape and families)."""
    meta = {
        "format": fmt,
        "n_nodes": net.n_nodes,
        "n_layers": net.n_layers,
        "n_times": net.n_times,
        "families": [f.kind for f in net.families],
    }
    if dim is not None:
        meta["dim"] = dim
    if extra:
        meta.update(extra)
    Path(path).write_text(json.dumps(meta, indent=2))


def read_meta(path) -> dict:
    """Sidecar JSON back as a dict with WeightFamily objects resolved."""
    meta = json.loads(Path(path).read_text())
    meta["families"] = tuple(WeightFamily(kind) for kind in meta["families"])
    return meta
