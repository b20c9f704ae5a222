"""Stochastic graph views: edge dropping and feature masking per batch."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, build_graph
from .samplers import Batch

FEATURE_MASK_MODES = ("element", "dimension")
EDGE_MODES = ("drop_only", "flip")


@dataclass
class AugmentSpec:
    edge_drop_prob: float = 0.5
    feature_mask_prob: float = 0.5
    feature_mask_mode: str = "element"
    edge_mode: str = "drop_only"

    def validate(self) -> None:
        if not 0.0 <= self.edge_drop_prob < 1.0:
            raise ValueError(f"edge_drop_prob must be in [0, 1), got {self.edge_drop_prob}")
        if not 0.0 <= self.feature_mask_prob < 1.0:
            raise ValueError(f"feature_mask_prob must be in [0, 1), got {self.feature_mask_prob}")
        if self.feature_mask_mode not in FEATURE_MASK_MODES:
            raise ValueError(f"unknown feature mask mode {self.feature_mask_mode!r}")
        if self.edge_mode not in EDGE_MODES:
            raise ValueError(f"unknown edge mode {self.edge_mode!r}")


@dataclass
class View:
    """An augmented (graph, features) pair; node order matches the batch."""

    graph: Graph
    features: np.ndarray
    origin: Batch


def drop_edges(g: Graph, p: float, rng: np.random.Generator, mode: str = "drop_only") -> Graph:
    """Remove each undirected edge independently with probability ``p``.

    In ``flip`` mode, additionally turn non-edges into edges with the same
    probability (the number of additions is drawn from the exact binomial and
    the pairs by rejection, so the dense pair set is never materialized).
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"drop probability must be in [0, 1), got {p}")
    if mode not in EDGE_MODES:
        raise ValueError(f"unknown edge mode {mode!r}")
    uv = g.edge_list()
    keep = rng.random(g.num_edges) >= p if g.num_edges else np.empty(0, dtype=bool)
    kept = uv[keep] if g.num_edges else uv
    if mode == "flip":
        n = g.num_nodes
        num_pairs = n * (n - 1) // 2
        n_add = int(rng.binomial(max(num_pairs - g.num_edges, 0), p))
        existing = {(int(a), int(b)) for a, b in uv}
        added: set[tuple[int, int]] = set()
        attempts = 0
        while len(added) < n_add and attempts < 50 * max(n_add, 1):
            attempts += 1
            a, b = int(rng.integers(n)), int(rng.integers(n))
            if a == b:
                continue
            pair = (min(a, b), max(a, b))
            if pair in existing or pair in added:
                continue
            added.add(pair)
        if added:
            kept = np.concatenate([kept.reshape(-1, 2), np.array(sorted(added), dtype=np.int64)])
    return build_graph(kept, g.num_nodes)


def mask_features(
    x: np.ndarray, p: float, mode: str, rng: np.random.Generator
) -> np.ndarray:
    """Zero entries (element mode) or whole columns (dimension mode) w.p. ``p``.

    Unmasked entries are copied bit-identically.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"mask probability must be in [0, 1), got {p}")
    if mode not in FEATURE_MASK_MODES:
        raise ValueError(f"unknown feature mask mode {mode!r}")
    out = x.copy()
    if mode == "element":
        out[rng.random(x.shape) < p] = 0
    else:
        out[:, rng.random(x.shape[1]) < p] = 0
    return out


def make_views(
    batch: Batch,
    spec_i: AugmentSpec,
    spec_j: AugmentSpec,
    rng: np.random.Generator,
) -> tuple[View, View]:
    """Two independently augmented views sharing the batch node order."""
    if batch.features is None:
        raise ValueError("batch has no features to augment")
    spec_i.validate()
    spec_j.validate()
    views = []
    for spec in (spec_i, spec_j):
        g = drop_edges(batch.subgraph, spec.edge_drop_prob, rng, spec.edge_mode)
        x = mask_features(batch.features, spec.feature_mask_prob, spec.feature_mask_mode, rng)
        views.append(View(graph=g, features=x, origin=batch))
    return views[0], views[1]
