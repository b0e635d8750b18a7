"""Weighted network containers, file I/O and structural statistics.

Networks are undirected and node-aligned: the same node set is shared by
every layer and time slice, there are no self-loops, and there is one
weight family per layer. Storage is sparse; a pair absent from storage
has weight zero, which is admissible under both supported families.

Node, layer and time indices are 1-based in files and 0-based in memory;
the conversion happens only at the I/O boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "NetworkDataError",
    "WeightFamily",
    "BERNOULLI_LOGIT",
    "POISSON_LOG",
    "NetworkTensor",
    "load_network",
    "save_network",
    "degree_stats",
]

_FAMILY_KINDS = ("bernoulli_logit", "poisson_log")

EDGELIST_HEADER = ["i", "j", "layer", "time", "weight"]


class NetworkDataError(ValueError):
    """Malformed network file, inconsistent shape or inadmissible weight."""


@dataclass(frozen=True)
class WeightFamily:
    """Edge-weight distribution attached to one layer.

    ``kind`` is ``"bernoulli_logit"`` (binary weights, logistic link) or
    ``"poisson_log"`` (count weights, log link). ``dispersion`` is a
    reserved slot for families with an extra parameter; it is unused by
    the two supported families and never sampled.
    """

    kind: str
    dispersion: float | None = None

    def __post_init__(self):
        if self.kind not in _FAMILY_KINDS:
            raise NetworkDataError(f"unknown weight family {self.kind!r}")
        if self.dispersion is not None and self.dispersion <= 0:
            raise NetworkDataError("dispersion must be positive")

    @property
    def code(self) -> int:
        """Integer code understood by the likelihood kernels."""
        return _FAMILY_KINDS.index(self.kind)

    def admissible(self, y: float) -> bool:
        """Whether ``y`` is a valid weight under this family."""
        if self.kind == "bernoulli_logit":
            return y in (0.0, 1.0)
        return y >= 0 and float(y).is_integer()


BERNOULLI_LOGIT = WeightFamily("bernoulli_logit")
POISSON_LOG = WeightFamily("poisson_log")


@dataclass(frozen=True)
class NetworkTensor:
    """Observed weights ``weights[(i, j, r, t)]`` for node pairs i < j.

    Immutable after construction, so instances can be shared freely
    across concurrently running chains.
    """

    n_nodes: int
    n_layers: int
    n_times: int
    families: tuple[WeightFamily, ...]
    weights: dict[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if min(self.n_nodes, self.n_layers, self.n_times) < 1:
            raise NetworkDataError("network dimensions must be positive")
        object.__setattr__(self, "families", tuple(self.families))
        if len(self.families) != self.n_layers:
            raise NetworkDataError(
                f"expected {self.n_layers} weight families, got {len(self.families)}"
            )
        for (i, j, r, t), y in self.weights.items():
            if i == j:
                raise NetworkDataError(f"self-loop at node {i + 1}")
            if not (0 <= i < j < self.n_nodes):
                raise NetworkDataError(f"node pair ({i + 1}, {j + 1}) out of range")
            if not (0 <= r < self.n_layers and 0 <= t < self.n_times):
                raise NetworkDataError(f"layer/time ({r + 1}, {t + 1}) out of range")
            if not np.isfinite(y):
                raise NetworkDataError(f"non-finite weight at ({i + 1}, {j + 1})")
            if not self.families[r].admissible(y):
                raise NetworkDataError(
                    f"weight {y!r} inadmissible for {self.families[r].kind} "
                    f"at ({i + 1}, {j + 1}, layer {r + 1}, time {t + 1})"
                )

    @property
    def n_pairs(self) -> int:
        return self.n_nodes * (self.n_nodes - 1) // 2

    def weight(self, i: int, j: int, r: int = 0, t: int = 0) -> float:
        """Weight of the unordered pair {i, j} (0-based indices)."""
        if i == j:
            raise NetworkDataError("no self-loops")
        if i > j:
            i, j = j, i
        return self.weights.get((i, j, r, t), 0.0)

    @cached_property
    def dense(self) -> np.ndarray:
        """Symmetric dense view of shape (n_layers, n_times, N, N)."""
        out = np.zeros((self.n_layers, self.n_times, self.n_nodes, self.n_nodes))
        for (i, j, r, t), y in self.weights.items():
            out[r, t, i, j] = y
            out[r, t, j, i] = y
        return out


def degree_stats(net: NetworkTensor) -> np.ndarray:
    """Per-node total strength, summed over layers and times.

    Feeds the degree-based block partition heuristic; equivariant under
    node relabelling.
    """
    strength = np.zeros(net.n_nodes)
    for (i, j, _r, _t), y in net.weights.items():
        strength[i] += y
        strength[j] += y
    return strength


def _as_families(families, n_layers: int) -> tuple[WeightFamily, ...]:
    if isinstance(families, WeightFamily):
        return (families,) * n_layers
    fams = tuple(families)
    if len(fams) == 1 and n_layers > 1:
        fams = fams * n_layers
    return fams


def load_network(
    path,
    fmt: str = "edgelist",
    *,
    families: WeightFamily | Sequence[WeightFamily],
    n_nodes: int | None = None,
    n_layers: int | None = None,
    n_times: int | None = None,
) -> NetworkTensor:
    """Read a network file and return a validated :class:`NetworkTensor`.

    ``fmt`` is ``"edgelist"`` (header ``i,j,layer,time,weight``, one row
    per nonzero weight, 1-based indices) or ``"dense"`` (one N x N matrix
    per ``# layer=<r> time=<t>`` block). Shape arguments not supplied are
    inferred from the largest index seen; ``families`` may be a single
    family applied to every layer.
    """
    path = Path(path)
    if not path.exists():
        raise NetworkDataError(f"network file not found: {path}")
    if fmt == "edgelist":
        return _load_edgelist(path, families, n_nodes, n_layers, n_times)
    if fmt == "dense":
        return _load_dense(path, families, n_nodes, n_layers, n_times)
    raise NetworkDataError(f"unknown network format {fmt!r}")


def _load_edgelist(path, families, n_nodes, n_layers, n_times) -> NetworkTensor:
    weights: dict[tuple[int, int, int, int], float] = {}
    max_node = max_layer = max_time = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != EDGELIST_HEADER:
            raise NetworkDataError(f"bad edge-list header in {path}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise NetworkDataError(f"{path}:{lineno}: expected 5 fields")
            try:
                i, j, r, t = (int(v) for v in row[:4])
                y = float(row[4])
            except ValueError as exc:
                raise NetworkDataError(f"{path}:{lineno}: {exc}") from None
            if i == j:
                raise NetworkDataError(f"{path}:{lineno}: self-loop at node {i}")
            if min(i, j, r, t) < 1:
                raise NetworkDataError(f"{path}:{lineno}: indices are 1-based")
            a, b = (i - 1, j - 1) if i < j else (j - 1, i - 1)
            key = (a, b, r - 1, t - 1)
            if key in weights:
                raise NetworkDataError(
                    f"{path}:{lineno}: duplicate entry for pair ({i}, {j})"
                )
            max_node = max(max_node, i, j)
            max_layer = max(max_layer, r)
            max_time = max(max_time, t)
            if y != 0.0:
                weights[key] = y
    n_nodes = n_nodes if n_nodes is not None else max_node
    n_layers = n_layers if n_layers is not None else max(max_layer, 1)
    n_times = n_times if n_times is not None else max(max_time, 1)
    if max_node > n_nodes:
        raise NetworkDataError(f"node index {max_node} exceeds n_nodes={n_nodes}")
    return NetworkTensor(
        n_nodes=n_nodes,
        n_layers=n_layers,
        n_times=n_times,
        families=_as_families(families, n_layers),
        weights=weights,
    )


def _load_dense(path, families, n_nodes, n_layers, n_times) -> NetworkTensor:
    blocks: dict[tuple[int, int], list[list[float]]] = {}
    current: list[list[float]] | None = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                try:
                    parts = dict(p.split("=") for p in line[1:].split())
                    key = (int(parts["layer"]) - 1, int(parts["time"]) - 1)
                except (ValueError, KeyError):
                    raise NetworkDataError(
                        f"{path}:{lineno}: bad block header {line!r}"
                    ) from None
                if key in blocks:
                    raise NetworkDataError(f"{path}:{lineno}: duplicate block {key}")
                current = blocks.setdefault(key, [])
                continue
            if current is None:
                raise NetworkDataError(f"{path}:{lineno}: data before block header")
            try:
                current.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise NetworkDataError(f"{path}:{lineno}: {exc}") from None
    if not blocks:
        raise NetworkDataError(f"{path}: no matrix blocks found")

    sizes = {len(rows) for rows in blocks.values()}
    widths = {len(row) for rows in blocks.values() for row in rows}
    if len(sizes) != 1 or sizes != widths:
        raise NetworkDataError(f"{path}: matrix blocks must be square and equal-sized")
    n = sizes.pop()
    n_nodes = n_nodes if n_nodes is not None else n
    if n != n_nodes:
        raise NetworkDataError(f"{path}: matrix size {n} != n_nodes={n_nodes}")
    n_layers = n_layers if n_layers is not None else 1 + max(r for r, _ in blocks)
    n_times = n_times if n_times is not None else 1 + max(t for _, t in blocks)

    weights: dict[tuple[int, int, int, int], float] = {}
    for (r, t), rows in blocks.items():
        mat = np.asarray(rows)
        if not np.array_equal(mat, mat.T):
            raise NetworkDataError(f"{path}: block layer={r + 1} time={t + 1} not symmetric")
        if np.any(np.diagonal(mat) != 0.0):
            raise NetworkDataError(f"{path}: nonzero diagonal in layer={r + 1} time={t + 1}")
        for i in range(n):
            for j in range(i + 1, n):
                if mat[i, j] != 0.0:
                    weights[(i, j, r, t)] = float(mat[i, j])
    return NetworkTensor(
        n_nodes=n_nodes,
        n_layers=n_layers,
        n_times=n_times,
        families=_as_families(families, n_layers),
        weights=weights,
    )


def _format_weight(y: float) -> str:
    return str(int(y)) if float(y).is_integer() else repr(y)


def save_network(net: NetworkTensor, path, fmt: str = "edgelist") -> None:
    """Write ``net`` so that :func:`load_network` reproduces it exactly."""
    path = Path(path)
    if fmt == "edgelist":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(EDGELIST_HEADER)
            for (i, j, r, t) in sorted(net.weights):
                y = net.weights[(i, j, r, t)]
                writer.writerow([i + 1, j + 1, r + 1, t + 1, _format_weight(y)])
    elif fmt == "dense":
        dense = net.dense
        with open(path, "w") as fh:
            for r in range(net.n_layers):
                for t in range(net.n_times):
                    fh.write(f"# layer={r + 1} time={t + 1}\n")
                    for row in dense[r, t]:
                        fh.write(",".join(_format_weight(v) for v in row) + "\n")
    else:
        raise NetworkDataError(f"unknown network format {fmt!r}")
