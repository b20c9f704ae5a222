"""Two-layer GCN encoder with exact hand-derived forward and reverse passes.

Forward pass (second layer linear, no activation):

    H = P @ relu(P @ X @ W1) @ W2,    P = D~^-1/2 (A + I) D~^-1/2

Self-loops are added inside the normalization only; the Graph itself never
stores them. The forward cache keeps every intermediate needed for an exact
adjoint, and the relu subgradient is 0 at 0.

Checkpoint layout (little-endian):

    bytes 0-3    magic b"GCL1"
    bytes 4-5    uint16 format version (1)
    byte  6      uint8 flags (bit 0: weights shared across views)
    byte  7      uint8 array count (2 shared, 4 per-view)
    per array    uint32 rows, uint32 cols
    payload      row-major float32 data for each array in order
                 W1, W2 [, W1_b, W2_b]
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .graph import Graph, sym_norm_propagate

CHECKPOINT_MAGIC = b"GCL1"
CHECKPOINT_VERSION = 1
NORM_EPS = 1e-12


class DivergenceError(RuntimeError):
    """A computation produced non-finite values."""


@dataclass
class EncoderParams:
    """GCN weights; optionally a second set for the other view."""

    W1: np.ndarray
    W2: np.ndarray
    shared: bool = True
    W1_b: np.ndarray | None = None
    W2_b: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.W1.shape[1] != self.W2.shape[0]:
            raise ValueError(
                f"layer shapes do not chain: {self.W1.shape} then {self.W2.shape}"
            )
        if not self.shared:
            if self.W1_b is None or self.W2_b is None:
                raise ValueError("per-view params need W1_b and W2_b")
            if self.W1_b.shape != self.W1.shape or self.W2_b.shape != self.W2.shape:
                raise ValueError("per-view weight shapes must match the first view")

    @property
    def in_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W2.shape[1]

    def weights_for(self, view: int) -> tuple[np.ndarray, np.ndarray]:
        if view not in (0, 1):
            raise ValueError(f"view must be 0 or 1, got {view}")
        if self.shared or view == 0:
            return self.W1, self.W2
        return self.W1_b, self.W2_b

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in canonical (checkpoint) order."""
        if self.shared:
            return [self.W1, self.W2]
        return [self.W1, self.W2, self.W1_b, self.W2_b]

    def replace_arrays(self, arrays: list[np.ndarray]) -> "EncoderParams":
        if self.shared:
            w1, w2 = arrays
            return EncoderParams(w1, w2, shared=True)
        w1, w2, w1b, w2b = arrays
        return EncoderParams(w1, w2, shared=False, W1_b=w1b, W2_b=w2b)

    def astype(self, dtype) -> "EncoderParams":
        return self.replace_arrays([a.astype(dtype) for a in self.arrays()])


def init_params(
    f_in: int,
    f_hidden: int,
    f_out: int,
    seed: int,
    shared: bool = True,
    dtype=np.float32,
) -> EncoderParams:
    """Glorot-uniform init, deterministic under ``seed``."""
    if f_in < 1 or f_hidden < 1 or f_out < 1:
        raise ValueError(f"dimensions must be >= 1, got ({f_in}, {f_hidden}, {f_out})")
    rng = np.random.default_rng(seed)

    def glorot(rows: int, cols: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-limit, limit, size=(rows, cols)).astype(dtype)

    w1, w2 = glorot(f_in, f_hidden), glorot(f_hidden, f_out)
    if shared:
        return EncoderParams(w1, w2, shared=True)
    return EncoderParams(
        w1, w2, shared=False, W1_b=glorot(f_in, f_hidden), W2_b=glorot(f_hidden, f_out)
    )


@dataclass
class ForwardCache:
    """Intermediates of one recorded forward pass."""

    graph: Graph
    prop_x: np.ndarray  # P @ X
    pre_act: np.ndarray  # Z1 = (P @ X) @ W1
    prop_hidden: np.ndarray  # Z2 = P @ relu(Z1)
    W2: np.ndarray
    view: int


def gcn_forward(
    g: Graph, x: np.ndarray, params: EncoderParams, view: int = 0
) -> tuple[np.ndarray, ForwardCache]:
    """Embeddings for one view plus the cache for the exact backward pass."""
    w1, w2 = params.weights_for(view)
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != g.num_nodes or x.shape[1] != w1.shape[0]:
        raise ValueError(
            f"features shape {x.shape} incompatible with graph n={g.num_nodes} "
            f"and W1 {w1.shape}"
        )
    prop_x = sym_norm_propagate(g, x)
    z1 = prop_x @ w1
    hidden = np.maximum(z1, 0)
    z2 = sym_norm_propagate(g, hidden)
    h = z2 @ w2
    if not np.isfinite(h).all():
        raise DivergenceError("encoder forward produced non-finite embeddings")
    return h, ForwardCache(graph=g, prop_x=prop_x, pre_act=z1, prop_hidden=z2, W2=w2, view=view)


def gcn_backward(cache: ForwardCache, d_h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradients (dW1, dW2) of the recorded forward pass."""
    d_h = np.asarray(d_h)
    if d_h.shape != (cache.prop_hidden.shape[0], cache.W2.shape[1]):
        raise ValueError(
            f"upstream gradient shape {d_h.shape} does not match forward output "
            f"({cache.prop_hidden.shape[0]}, {cache.W2.shape[1]})"
        )
    d_w2 = cache.prop_hidden.T @ d_h
    d_hidden = sym_norm_propagate(cache.graph, d_h @ cache.W2.T)
    d_z1 = d_hidden * (cache.pre_act > 0)
    d_w1 = cache.prop_x.T @ d_z1
    return d_w1, d_w2


@dataclass
class NormCache:
    normalized: np.ndarray
    denom: np.ndarray  # max(row norm, NORM_EPS), shape (N, 1)
    smooth: np.ndarray  # rows where the true norm exceeded the guard


def l2_normalize_rows(h: np.ndarray) -> tuple[np.ndarray, NormCache]:
    """Rows divided by max(||row||, 1e-12); zero rows stay zero."""
    h = np.asarray(h)
    norms = np.sqrt(np.sum(h * h, axis=1, keepdims=True))
    denom = np.maximum(norms, NORM_EPS)
    normalized = h / denom
    return normalized, NormCache(normalized=normalized, denom=denom, smooth=norms > NORM_EPS)


def l2_normalize_rows_backward(cache: NormCache, d_normalized: np.ndarray) -> np.ndarray:
    """Exact adjoint of l2_normalize_rows; guarded rows use the constant denom."""
    d_normalized = np.asarray(d_normalized)
    if d_normalized.shape != cache.normalized.shape:
        raise ValueError(
            f"gradient shape {d_normalized.shape} does not match {cache.normalized.shape}"
        )
    dot = np.sum(cache.normalized * d_normalized, axis=1, keepdims=True)
    return (d_normalized - cache.smooth * cache.normalized * dot) / cache.denom


# -- checkpointing -------------------------------------------------------------


def save_checkpoint(path: str, params: EncoderParams) -> None:
    arrays = params.arrays()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HBB", CHECKPOINT_VERSION, int(params.shared), len(arrays)))
        for a in arrays:
            fh.write(struct.pack("<II", a.shape[0], a.shape[1]))
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def load_checkpoint(path: str, dtype=np.float32) -> EncoderParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    version, shared_flag, count = struct.unpack_from("<HBB", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    if count not in (2, 4):
        raise ValueError(f"{path}: invalid array count {count}")
    offset = 8
    shapes = []
    for _ in range(count):
        rows, cols = struct.unpack_from("<II", blob, offset)
        shapes.append((rows, cols))
        offset += 8
    arrays = []
    for rows, cols in shapes:
        nbytes = rows * cols * 4
        if offset + nbytes > len(blob):
            raise ValueError(f"{path}: truncated checkpoint payload")
        flat = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=offset)
        arrays.append(flat.reshape(rows, cols).astype(dtype))
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes after checkpoint payload")
    shared = bool(shared_flag & 1)
    if shared != (count == 2):
        raise ValueError(f"{path}: shared flag inconsistent with array count")
    if shared:
        return EncoderParams(arrays[0], arrays[1], shared=True)
    return EncoderParams(arrays[0], arrays[1], shared=False, W1_b=arrays[2], W2_b=arrays[3])
