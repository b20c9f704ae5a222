"""Dataset ingestion, splits, and synthetic generators (grid, homophily growth).

Text formats (UTF-8, LF; stray CR characters are stripped):

- graph file:    line 1 ``N E``, then E lines ``u v`` (0-based, one undirected
  edge per line).
- features file: line 1 ``N F``, then N lines of F decimal floats.
- labels file:   N lines, one integer class id per line.

The writers emit shortest round-tripping decimal floats, so save -> load
reproduces a dataset bit-identically at the same precision.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Graph, build_graph, induced_subgraph
from .seeding import rng_for


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/val/test node-id sets (sorted arrays)."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def validate(self, n: int) -> None:
        parts = np.concatenate([self.train, self.val, self.test])
        if parts.size and (parts.min() < 0 or parts.max() >= n):
            raise ValueError("split ids out of range")
        if np.unique(parts).size != parts.size:
            raise ValueError("splits must be disjoint")

    def ratios(self, n: int) -> tuple[float, float, float]:
        r0 = self.train.size / n
        r1 = self.val.size / n
        return (r0, r1, 1.0 - r0 - r1)


@dataclass
class Dataset:
    """Graph plus node features and optional labels/splits."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray | None = None
    splits: SplitSpec | None = None

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        if self.labels is None:
            raise ValueError("dataset has no labels")
        return int(self.labels.max()) + 1

    def validate(self) -> None:
        if self.features.ndim != 2 or self.features.shape[0] != self.graph.num_nodes:
            raise ValueError(
                f"features shape {self.features.shape} does not match "
                f"{self.graph.num_nodes} nodes"
            )
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite values")
        if self.labels is not None:
            if self.labels.shape != (self.graph.num_nodes,):
                raise ValueError("labels length must equal node count")
            classes = np.unique(self.labels)
            if not np.array_equal(classes, np.arange(classes.size)):
                raise ValueError("class ids must be contiguous from 0")
        if self.splits is not None:
            self.splits.validate(self.graph.num_nodes)


@dataclass
class KarimiSpec:
    """Parameters of the homophilic preferential-attachment generator.

    Growth: nodes arrive one at a time and attach ``m`` edges to existing
    nodes, drawn without replacement with probability proportional to
    ``s(label_new, label_v) * degree(v)`` where ``s`` is ``h`` for equal
    labels and ``1 - h`` otherwise. The process starts from a clique of
    ``m + 1`` nodes with alternating labels.

    Features are ``feature_dim`` i.i.d. standard Gaussians per node plus a
    ``class_offset`` bump on the coordinate indexed by the node's class, so
    the label signal strength is explicit and tunable.
    """

    n: int
    m: int = 2
    h: float = 0.5
    minority_fraction: float = 0.5
    feature_dim: int = 16
    class_offset: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.h <= 1.0:
            raise ValueError(f"h must be in [0, 1], got {self.h}")
        if not 0.0 < self.minority_fraction < 1.0:
            raise ValueError("minority_fraction must be in (0, 1)")
        if self.n < self.m + 2:
            raise ValueError(f"n must exceed the seed clique size {self.m + 1}")
        if self.feature_dim < 2:
            raise ValueError("feature_dim must be >= 2 to encode two classes")


# -- text-format IO ----------------------------------------------------------


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.replace("\r", "") for ln in fh.read().split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_header(path: str, line: str, what: str) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise ValueError(f"{path}:1: expected '{what}' header, got {line!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ValueError(f"{path}:1: non-integer header {line!r}") from exc


def load_graph_file(path: str) -> Graph:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}:1: empty graph file")
    n, e = _parse_header(path, lines[0], "N E")
    if len(lines) - 1 != e:
        raise ValueError(f"{path}: header promises {e} edges, file has {len(lines) - 1}")
    edges = np.empty((e, 2), dtype=np.int64)
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{i}: expected 'u v', got {ln!r}")
        try:
            edges[i - 2] = (int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: non-integer edge {ln!r}") from exc
    try:
        g = build_graph(edges, n)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    return g


def load_features_file(path: str, dtype=np.float32) -> np.ndarray:
    lines = _read_lines(path)
    if not lines:
        raise ValueError(f"{path}:1: empty features file")
    n, f = _parse_header(path, lines[0], "N F")
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: header promises {n} rows, file has {len(lines) - 1}")
    out = np.empty((n, f), dtype=dtype)
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != f:
            raise ValueError(f"{path}:{i}: expected {f} values, got {len(parts)}")
        try:
            out[i - 2] = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: bad float in {ln!r}") from exc
    return out


def load_labels_file(path: str, n: int) -> np.ndarray:
    lines = _read_lines(path)
    if len(lines) != n:
        raise ValueError(f"{path}: expected {n} label lines, got {len(lines)}")
    out = np.empty(n, dtype=np.int64)
    for i, ln in enumerate(lines, start=1):
        try:
            out[i - 1] = int(ln.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: non-integer label {ln!r}") from exc
    return out


def load_dataset(
    graph_path: str,
    features_path: str,
    labels_path: str | None = None,
    dtype=np.float32,
) -> Dataset:
    """Load and validate a dataset from the documented text formats."""
    g = load_graph_file(graph_path)
    x = load_features_file(features_path, dtype=dtype)
    if x.shape[0] != g.num_nodes:
        raise ValueError(
            f"{features_path}: {x.shape[0]} feature rows but graph has {g.num_nodes} nodes"
        )
    labels = load_labels_file(labels_path, g.num_nodes) if labels_path else None
    ds = Dataset(g, x, labels)
    ds.validate()
    return ds


def _float_formatter(dtype):
    if np.dtype(dtype) == np.float32:
        return lambda x: np.format_float_positional(np.float32(x), unique=True, trim="0")
    return lambda x: np.format_float_positional(np.float64(x), unique=True, trim="0")


def save_dataset(
    ds: Dataset,
    graph_path: str,
    features_path: str,
    labels_path: str | None = None,
) -> None:
    """Write a dataset in the canonical text formats (lossless round-trip)."""
    g = ds.graph
    with open(graph_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{g.num_nodes} {g.num_edges}\n")
        for u, v in g.edge_list():
            fh.write(f"{u} {v}\n")
    fmt = _float_formatter(ds.features.dtype)
    with open(features_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{ds.features.shape[0]} {ds.features.shape[1]}\n")
        for row in ds.features:
            fh.write(" ".join(fmt(x) for x in row))
            fh.write("\n")
    if labels_path is not None:
        if ds.labels is None:
            raise ValueError("dataset has no labels to save")
        with open(labels_path, "w", encoding="utf-8", newline="\n") as fh:
            for lbl in ds.labels:
                fh.write(f"{lbl}\n")


# -- splits ------------------------------------------------------------------


def make_splits(n: int, ratios: tuple[float, float, float] = (0.1, 0.1, 0.8), seed: int = 0) -> SplitSpec:
    """Random disjoint splits; floor allocation with the remainder to test."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive values summing to 1, got {ratios}")
    n_train = int(np.floor(ratios[0] * n))
    n_val = int(np.floor(ratios[1] * n))
    if n_train == 0 or n_val == 0 or n - n_train - n_val == 0:
        raise ValueError(f"degenerate split sizes for n={n}, ratios={ratios}")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitSpec(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train : n_train + n_val]),
        test=np.sort(perm[n_train + n_val :]),
    )


# -- synthetic generators ------------------------------------------------------


def gen_grid(rows: int, cols: int) -> Graph:
    """4-neighbor lattice with row-major node ids."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return build_graph(edges, rows * cols)


def grid_dataset(rows: int, cols: int) -> Dataset:
    """Grid graph with normalized (row, col) coordinates as features.

    Labels are all zero: the lattice has no class structure, but downstream
    file formats expect a label per node.
    """
    g = gen_grid(rows, cols)
    rr, cc = np.divmod(np.arange(rows * cols), cols)
    x = np.column_stack(
        [rr / max(rows - 1, 1), cc / max(cols - 1, 1)]
    ).astype(np.float32)
    return Dataset(g, x, np.zeros(rows * cols, dtype=np.int64))


def gen_karimi(spec: KarimiSpec, dtype=np.float32) -> Dataset:
    """Homophilic preferential-attachment graph with two classes.

    Deterministic under ``spec.seed``; structure and features draw from
    independent derived streams. When fewer than ``m`` positive-weight
    targets exist (possible at h = 0 or h = 1 early in growth), the new node
    attaches to all of them and the round yields fewer edges.
    """
    spec.validate()
    rng = rng_for(spec.seed, "karimi-structure")
    n, m = spec.n, spec.m
    clique = m + 1

    labels = np.empty(n, dtype=np.int64)
    labels[:clique] = np.arange(clique) % 2
    labels[clique:] = (rng.random(n - clique) < spec.minority_fraction).astype(np.int64)

    edges: list[tuple[int, int]] = [(u, v) for u in range(clique) for v in range(u + 1, clique)]
    deg = np.zeros(n, dtype=np.float64)
    deg[:clique] = m

    for new in range(clique, n):
        sim = np.where(labels[:new] == labels[new], spec.h, 1.0 - spec.h)
        w = sim * deg[:new]
        for _ in range(m):
            total = w.sum()
            if total <= 0.0:
                break
            t = int(rng.choice(new, p=w / total))
            w[t] = 0.0
            edges.append((new, t))
            deg[new] += 1
            deg[t] += 1

    g = build_graph(edges, n)
    feat_rng = rng_for(spec.seed, "karimi-features")
    x = feat_rng.standard_normal((n, spec.feature_dim))
    x[np.arange(n), labels] += spec.class_offset
    return Dataset(g, x.astype(dtype), labels)


def edge_homophily(g: Graph, labels: np.ndarray) -> float:
    """Fraction of edges whose endpoints share a label."""
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    uv = g.edge_list()
    return float(np.mean(labels[uv[:, 0]] == labels[uv[:, 1]]))


def subsample_nodes(ds: Dataset, k: int, seed: int = 0) -> Dataset:
    """Dataset induced on k uniformly chosen nodes (splits are dropped)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > ds.num_nodes:
        raise ValueError(f"k={k} exceeds node count {ds.num_nodes}")
    ids = np.sort(np.random.default_rng(seed).choice(ds.num_nodes, size=k, replace=False))
    sub, mapping = induced_subgraph(ds.graph, ids)
    return Dataset(
        sub,
        ds.features[mapping].copy(),
        None if ds.labels is None else ds.labels[mapping].copy(),
    )
