"""Mini-batch subgraph generation: node, edge, random-walk, and ego samplers.

Every sampler returns a Batch whose subgraph is the induced subgraph of the
source graph on the sampled node set, with local ids in ascending global-id
order. Batches are independent draws, not a partition of the graph.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .graph import Graph, bfs_distances, induced_subgraph
from .seeding import derive_seed

SAMPLER_KINDS = ("node", "edge", "random_walk", "ego")
_WALK_ROUND_CAP = 50


@dataclass
class SamplerSpec:
    """Configuration shared by all samplers; only the relevant fields apply."""

    kind: str = "random_walk"
    budget: int = 2000
    walk_length: int = 4
    num_roots: int = 3
    ego_hops: int = 2
    node_probabilities: np.ndarray | None = None
    edge_weighting: str = "uniform"  # or "degree": P(e) proportional to 1/deg(u)+1/deg(v)

    def validate(self) -> None:
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.walk_length < 0 or self.num_roots < 1 or self.ego_hops < 0:
            raise ValueError("walk_length/num_roots/ego_hops out of range")
        if self.edge_weighting not in ("uniform", "degree"):
            raise ValueError(f"unknown edge weighting {self.edge_weighting!r}")
        if self.node_probabilities is not None:
            p = np.asarray(self.node_probabilities, dtype=np.float64)
            if p.min() < 0 or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("node probabilities must be nonnegative and sum to 1")


@dataclass
class Batch:
    """One sampled subgraph with its restricted features and labels."""

    subgraph: Graph
    global_ids: np.ndarray
    features: np.ndarray | None
    labels: np.ndarray | None
    under_budget: bool = False

    @property
    def num_nodes(self) -> int:
        return self.subgraph.num_nodes


def _unpack(source: Dataset | Graph) -> tuple[Graph, np.ndarray | None, np.ndarray | None]:
    if isinstance(source, Dataset):
        return source.graph, source.features, source.labels
    return source, None, None


def _batch_from_nodes(source: Dataset | Graph, ids: np.ndarray, under_budget: bool = False) -> Batch:
    g, x, y = _unpack(source)
    sub, mapping = induced_subgraph(g, ids)
    return Batch(
        subgraph=sub,
        global_ids=mapping,
        features=None if x is None else x[mapping],
        labels=None if y is None else y[mapping],
        under_budget=under_budget,
    )


def sample_node(
    source: Dataset | Graph,
    budget: int,
    rng: np.random.Generator,
    probabilities: np.ndarray | None = None,
) -> Batch:
    """Draw ``budget`` distinct nodes (default uniform) and induce on them."""
    g, _, _ = _unpack(source)
    if not 1 <= budget <= g.num_nodes:
        raise ValueError(f"budget {budget} not in [1, {g.num_nodes}]")
    if probabilities is not None:
        probabilities = np.asarray(probabilities, dtype=np.float64)
        if probabilities.shape != (g.num_nodes,):
            raise ValueError("probabilities must have one entry per node")
    ids = rng.choice(g.num_nodes, size=budget, replace=False, p=probabilities)
    return _batch_from_nodes(source, ids)


def sample_edge(source: Dataset | Graph, m: int, rng: np.random.Generator) -> Batch:
    """Keep each edge independently with expected total ``m``; induce on endpoints.

    Uniform weighting keeps every edge with probability m/E; degree weighting
    uses P(e) proportional to 1/deg(u) + 1/deg(v), rescaled to sum to m.
    An empty draw is retried up to 10 times before raising.
    """
    return _sample_edge(source, m, rng, weighting="uniform")


def _sample_edge(source, m, rng, weighting="uniform") -> Batch:
    g, _, _ = _unpack(source)
    if g.num_edges == 0:
        raise ValueError("graph has no edges to sample")
    if not 1 <= m <= g.num_edges:
        raise ValueError(f"m {m} not in [1, {g.num_edges}]")
    uv = g.edge_list()
    if weighting == "degree":
        deg = g.degrees
        w = 1.0 / deg[uv[:, 0]] + 1.0 / deg[uv[:, 1]]
        p = np.minimum(m * w / w.sum(), 1.0)
    else:
        p = np.full(g.num_edges, m / g.num_edges)
    for _ in range(10):
        keep = rng.random(g.num_edges) < p
        if keep.any():
            ids = np.unique(uv[keep])
            return _batch_from_nodes(source, ids)
    raise RuntimeError(f"edge sampler drew an empty batch 10 times (m={m}, E={g.num_edges})")


def sample_random_walk(
    source: Dataset | Graph,
    num_roots: int,
    walk_length: int,
    budget: int,
    rng: np.random.Generator,
) -> Batch:
    """Union of nodes visited by repeated root-plus-walk rounds.

    Each round picks ``num_roots`` uniform roots and runs one uniform random
    walk of ``walk_length`` steps from each; rounds repeat until at least
    ``budget`` distinct nodes are collected or a hard cap of 50 rounds. A
    short batch is returned with ``under_budget=True`` and a warning.
    """
    g, _, _ = _unpack(source)
    if g.num_nodes == 0:
        raise ValueError("graph is empty")
    visited = np.zeros(g.num_nodes, dtype=bool)
    count = 0
    for _ in range(_WALK_ROUND_CAP):
        roots = rng.integers(0, g.num_nodes, size=num_roots)
        for u in roots:
            u = int(u)
            if not visited[u]:
                visited[u] = True
                count += 1
            for _ in range(walk_length):
                nb = g.neighbors_of(u)
                if nb.size == 0:
                    break
                u = int(nb[rng.integers(nb.size)])
                if not visited[u]:
                    visited[u] = True
                    count += 1
        if count >= budget:
            break
    under = count < budget
    if under:
        warnings.warn(
            f"random-walk sampler collected {count} < budget {budget} nodes "
            f"after {_WALK_ROUND_CAP} rounds",
            stacklevel=2,
        )
    return _batch_from_nodes(source, np.flatnonzero(visited), under_budget=under)


def sample_ego(source: Dataset | Graph, center: int, hops: int) -> Batch:
    """All nodes within ``hops`` of ``center``, induced."""
    g, _, _ = _unpack(source)
    if not 0 <= center < g.num_nodes:
        raise ValueError(f"center {center} out of range for n={g.num_nodes}")
    dist = bfs_distances(g, center, cutoff=hops)
    return _batch_from_nodes(source, np.flatnonzero(dist >= 0))


def sample_batch(source: Dataset | Graph, spec: SamplerSpec, rng: np.random.Generator) -> Batch:
    """Dispatch one draw according to ``spec.kind``."""
    spec.validate()
    g, _, _ = _unpack(source)
    if spec.kind == "node":
        return sample_node(source, min(spec.budget, g.num_nodes), rng, spec.node_probabilities)
    if spec.kind == "edge":
        return _sample_edge(source, min(spec.budget, g.num_edges), rng, spec.edge_weighting)
    if spec.kind == "random_walk":
        return sample_random_walk(source, spec.num_roots, spec.walk_length, spec.budget, rng)
    center = int(rng.integers(g.num_nodes))
    return sample_ego(source, center, spec.ego_hops)


def batch_stream(
    source: Dataset | Graph,
    spec: SamplerSpec,
    num_batches: int,
    seed: int,
) -> list[Batch]:
    """Independent batches with per-batch derived seeds; deterministic."""
    if num_batches < 1:
        raise ValueError(f"num_batches must be >= 1, got {num_batches}")
    out = []
    for k in range(num_batches):
        rng = np.random.default_rng(derive_seed(seed, f"batch-{k}"))
        out.append(sample_batch(source, spec, rng))
    return out
