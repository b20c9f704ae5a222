"""Graph filters that spread binary pair matrices to geodesic neighbors.

Three smoothers are provided, all operating row-wise on an (N, D) matrix
whose rows are indexed by the nodes of a view graph:

- Taubin: K rounds of a smoothing step followed by an unshrinking step,
  ``V <- (I + mu*L)((I + tau*L) V)`` with ``L = D^-1 A - I``, ``tau > 0``
  and ``mu < -tau``. Each step moves a value toward (or away from) the mean
  of its neighbors, so values can temporarily leave [0, 1].
- Bilateral: a single weighted averaging pass where the weight between two
  nodes combines hop distance and the Hamming distance between their binary
  rows, restricted to a hop-radius ball for tractability.
- Diffusion: K rounds of ``v_i <- v_i + eta * sum(v_j for j adjacent to i)``.

After filtering, a masking step restores an exact 1.0 wherever the input had
a 1 and clamps everything else into [0, 1]. With the identity matrix as
input, the masked output is the pairwise proximity kernel of the view graph:
entry (t, q) scores how close q is to t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, bfs_ball, rw_laplacian_apply

SMOOTHER_KINDS = ("taubin", "bilateral", "diffusion", "identity")

PAIR_ROLES = ("binary_pos", "smoothed_pos", "smoothed_neg")


@dataclass
class PairMatrix:
    """Role-tagged square pair-score matrix with entries in [0, 1]."""

    values: np.ndarray
    role: str = "binary_pos"

    def validate(self) -> None:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"pair matrix must be square, got {v.shape}")
        if self.role not in PAIR_ROLES:
            raise ValueError(f"unknown pair-matrix role {self.role!r}")
        if not np.isfinite(v).all() or v.min() < 0 or v.max() > 1:
            raise ValueError("pair-matrix entries must be finite and in [0, 1]")
        if self.role == "binary_pos" and not np.array_equal(v, np.eye(v.shape[0], dtype=v.dtype)):
            raise ValueError("binary positive matrix must be the identity pattern")

    @property
    def size(self) -> int:
        return self.values.shape[0]


def identity_pairs(n: int, dtype=np.float64) -> np.ndarray:
    """Binary positive matrix for aligned node orders: the identity."""
    if n < 1:
        raise ValueError(f"pair matrix size must be >= 1, got {n}")
    return np.eye(n, dtype=dtype)


def negatives(p_pos: np.ndarray) -> np.ndarray:
    """Elementwise complement 1 - P of a positive pair matrix."""
    p_pos = np.asarray(p_pos)
    if p_pos.size and (p_pos.min() < 0 or p_pos.max() > 1):
        raise ValueError("positive pair matrix entries must be in [0, 1]")
    return 1.0 - p_pos


def apply_mask_and_clamp(smoothed: np.ndarray, initial: np.ndarray) -> np.ndarray:
    """Restore exact 1.0 at initially-1 entries; clamp the rest to [0, 1]."""
    smoothed = np.asarray(smoothed)
    initial = np.asarray(initial)
    if smoothed.shape != initial.shape:
        raise ValueError(f"shape mismatch: {smoothed.shape} vs {initial.shape}")
    out = np.clip(smoothed, 0.0, 1.0)
    out[initial == 1] = 1.0
    return out


# -- raw filters (no masking) -------------------------------------------------


def taubin_filter(p: np.ndarray, g: Graph, mu: float, tau: float, k: int) -> np.ndarray:
    """K smoothing/unshrinking rounds; may overshoot [0, 1]."""
    v = np.asarray(p)
    if not np.issubdtype(v.dtype, np.floating):
        v = v.astype(np.float64)
    for _ in range(k):
        v = v + tau * rw_laplacian_apply(g, v)
        v = v + mu * rw_laplacian_apply(g, v)
    return v


def diffusion_filter(p: np.ndarray, g: Graph, eta: float, k: int) -> np.ndarray:
    """K rounds of adding eta times the plain neighbor sum."""
    v = np.asarray(p)
    if not np.issubdtype(v.dtype, np.floating):
        v = v.astype(np.float64)
    vec = v.ndim == 1
    cols = v.reshape(g.num_nodes, -1)
    a = g.adjacency(cols.dtype)
    for _ in range(k):
        cols = cols + eta * (a @ cols)
    return cols.reshape(-1) if vec else cols


def bilateral_filter(
    p: np.ndarray,
    g: Graph,
    sigma_spa: float,
    sigma_int: float,
    radius: int,
    squared: bool = True,
) -> np.ndarray:
    """Weighted neighborhood averaging with spatial and intensity terms.

    For each row i, weights over nodes j within ``radius`` hops are
    ``exp(-d_spa^2 / (2 sigma_spa^2) - d_int^2 / (2 sigma_int^2))`` where
    d_spa is the hop distance and d_int the Hamming distance between the
    binary rows i and j of the input. ``squared=False`` switches to the
    unsquared distances in the exponent. The self weight is always 1, so the
    normalization never divides by zero.
    """
    v = np.asarray(p)
    if not np.issubdtype(v.dtype, np.floating):
        v = v.astype(np.float64)
    vec = v.ndim == 1
    cols = v.reshape(g.num_nodes, -1)
    out = np.empty_like(cols)
    inv_spa = 1.0 / (2.0 * sigma_spa * sigma_spa)
    inv_int = 1.0 / (2.0 * sigma_int * sigma_int)
    for i in range(g.num_nodes):
        ids, d_spa = bfs_ball(g, i, radius)
        d_int = np.count_nonzero(cols[ids] != cols[i], axis=1)
        if squared:
            expo = -(d_spa.astype(cols.dtype) ** 2) * inv_spa - (d_int.astype(cols.dtype) ** 2) * inv_int
        else:
            expo = -d_spa.astype(cols.dtype) * inv_spa - d_int.astype(cols.dtype) * inv_int
        w = np.exp(expo)
        out[i] = (w @ cols[ids]) / w.sum()
    return out.reshape(-1) if vec else out


# -- masked smoothing operations ---------------------------------------------


def _check_pair_rows(p: np.ndarray, g: Graph) -> None:
    if np.asarray(p).shape[0] != g.num_nodes:
        raise ValueError(
            f"pair matrix has {np.asarray(p).shape[0]} rows, view graph has {g.num_nodes} nodes"
        )


def smooth_taubin(p: np.ndarray, g: Graph, mu: float = -0.4, tau: float = 0.3, k: int = 2) -> np.ndarray:
    if not (tau > 0 and mu < -tau):
        raise ValueError(f"need tau > 0 and mu < -tau, got mu={mu}, tau={tau}")
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    _check_pair_rows(p, g)
    return apply_mask_and_clamp(taubin_filter(p, g, mu, tau, k), p)


def smooth_diffusion(p: np.ndarray, g: Graph, eta: float = 0.03, k: int = 2) -> np.ndarray:
    if eta <= 0:
        raise ValueError(f"diffusion rate must be positive, got {eta}")
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    _check_pair_rows(p, g)
    return apply_mask_and_clamp(diffusion_filter(p, g, eta, k), p)


def smooth_bilateral(
    p: np.ndarray,
    g: Graph,
    sigma_spa: float = 0.1,
    sigma_int: float = 2.0,
    radius: int = 2,
    squared: bool = True,
) -> np.ndarray:
    if sigma_spa <= 0 or sigma_int <= 0:
        raise ValueError(f"sigmas must be positive, got {sigma_spa}, {sigma_int}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    _check_pair_rows(p, g)
    return apply_mask_and_clamp(
        bilateral_filter(p, g, sigma_spa, sigma_int, radius, squared), p
    )


@dataclass
class SmootherSpec:
    """Smoother selection plus every kind's parameters in one bundle."""

    kind: str = "taubin"
    mu: float = -0.4
    tau: float = 0.3
    iterations: int = 2
    sigma_spa: float = 0.1
    sigma_int: float = 2.0
    radius: int = 2
    eta: float = 0.03
    squared_distances: bool = True

    def validate(self) -> None:
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if self.kind == "taubin" and not (self.tau > 0 and self.mu < -self.tau):
            raise ValueError(f"need tau > 0 and mu < -tau, got mu={self.mu}, tau={self.tau}")
        if self.kind == "bilateral" and (self.sigma_spa <= 0 or self.sigma_int <= 0 or self.radius < 0):
            raise ValueError("bilateral needs positive sigmas and radius >= 0")
        if self.kind == "diffusion" and self.eta <= 0:
            raise ValueError(f"diffusion rate must be positive, got {self.eta}")
        if self.iterations < 0:
            raise ValueError(f"iteration count must be >= 0, got {self.iterations}")

    def smooth(self, p: np.ndarray, g: Graph) -> np.ndarray:
        """Masked smoothing of ``p`` using the geometry of ``g``."""
        self.validate()
        if self.kind == "taubin":
            return smooth_taubin(p, g, self.mu, self.tau, self.iterations)
        if self.kind == "bilateral":
            return smooth_bilateral(
                p, g, self.sigma_spa, self.sigma_int, self.radius, self.squared_distances
            )
        if self.kind == "diffusion":
            return smooth_diffusion(p, g, self.eta, self.iterations)
        _check_pair_rows(p, g)
        return apply_mask_and_clamp(np.asarray(p), p)

    def smooth_pair_matrix(self, pm: PairMatrix, g: Graph) -> PairMatrix:
        return PairMatrix(self.smooth(pm.values, g), role="smoothed_pos")
