"""Smoothed contrastive loss, its exact gradients, and an InfoNCE baseline.

For one view pair (i, j) the directional loss is

    L(i,j) = || Pos (.) (1 - C) ||_F^2 + lambda * || Neg (.) C ||_F^2

where C is the min-max normalized cosine-similarity matrix between the row
normalized embeddings of the two views, Pos is the smoothed positive pair
matrix built from view i's geometry, and Neg = 1 - Pos. The symmetric batch
objective averages both directions: J = (L(i,j) + L(j,i)) / 2.

Min-max normalization is differentiated in full, including the subgradient
contributions at the argmin/argmax entries (ties broken by first occurrence
in row-major order), which keeps finite-difference verification honest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .augment import View
from .encoder import (
    EncoderParams,
    gcn_backward,
    gcn_forward,
    l2_normalize_rows,
    l2_normalize_rows_backward,
)
from .smoothing import SmootherSpec, identity_pairs, negatives

BASELINE_MODES = ("sgcl", "binary", "infonce")


@dataclass
class LossConfig:
    """Trade-off weight and baseline selection.

    ``lam=None`` resolves to 1/(2*N_b) per batch, balancing the single
    positive against the N_b - 1 negatives of each anchor.
    """

    lam: float | None = None
    baseline: str = "sgcl"
    temperature: float = 0.5

    def validate(self) -> None:
        if self.lam is not None and self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.baseline not in BASELINE_MODES:
            raise ValueError(f"unknown baseline {self.baseline!r}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")

    def resolve_lambda(self, batch_nodes: int) -> float:
        if self.lam is not None:
            return self.lam
        return 1.0 / (2.0 * batch_nodes)


@dataclass
class MinMaxRecord:
    """Normalization statistics needed to invert or differentiate min-max."""

    lo: float
    hi: float
    argmin: int  # flat row-major index, first occurrence
    argmax: int
    degenerate: bool


@dataclass
class SimilarityMatrix:
    """Raw and min-max normalized cosine similarities for one direction."""

    raw: np.ndarray
    normalized: np.ndarray
    record: MinMaxRecord


def cosine_matrix(hn_i: np.ndarray, hn_j: np.ndarray) -> np.ndarray:
    """Pairwise dot products of unit rows: entry (t, q) = cos(h_t, h_q)."""
    hn_i = np.asarray(hn_i)
    hn_j = np.asarray(hn_j)
    if hn_i.ndim != 2 or hn_j.ndim != 2 or hn_i.shape[1] != hn_j.shape[1]:
        raise ValueError(f"embedding shapes {hn_i.shape} and {hn_j.shape} do not align")
    return hn_i @ hn_j.T


def minmax_normalize(m: np.ndarray) -> tuple[np.ndarray, MinMaxRecord]:
    """Rescale the whole matrix to [0, 1]; a constant matrix maps to all 0.5."""
    m = np.asarray(m)
    if m.size == 0:
        raise ValueError("cannot min-max normalize an empty matrix")
    argmin = int(np.argmin(m))
    argmax = int(np.argmax(m))
    lo = float(m.flat[argmin])
    hi = float(m.flat[argmax])
    if hi == lo:
        return np.full_like(m, 0.5), MinMaxRecord(lo, hi, argmin, argmax, degenerate=True)
    return (m - lo) / (hi - lo), MinMaxRecord(lo, hi, argmin, argmax, degenerate=False)


def minmax_backward(d_c: np.ndarray, c: np.ndarray, record: MinMaxRecord) -> np.ndarray:
    """Adjoint of minmax_normalize, including the min/max statistic paths.

    In the degenerate case the output does not vary with the input to first
    order anywhere except at the (tied) extremes; the subgradient is zero.
    """
    d_c = np.asarray(d_c)
    if record.degenerate:
        return np.zeros_like(d_c)
    span = record.hi - record.lo
    d_m = d_c / span
    d_m.flat[record.argmin] += float(np.sum(d_c * (c - 1.0))) / span
    d_m.flat[record.argmax] += float(np.sum(d_c * (-c))) / span
    return d_m


def similarity(hn_i: np.ndarray, hn_j: np.ndarray) -> SimilarityMatrix:
    raw = cosine_matrix(hn_i, hn_j)
    normalized, record = minmax_normalize(raw)
    return SimilarityMatrix(raw=raw, normalized=normalized, record=record)


def sgcl_loss(c: np.ndarray, pos: np.ndarray, neg: np.ndarray, lam: float) -> float:
    """Frobenius objective: pull masked positives to 1, push negatives to 0."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    c, pos, neg = np.asarray(c), np.asarray(pos), np.asarray(neg)
    if not (c.shape == pos.shape == neg.shape):
        raise ValueError(f"shape mismatch: C {c.shape}, pos {pos.shape}, neg {neg.shape}")
    pull = pos * (1.0 - c)
    push = neg * c
    return float(np.sum(pull * pull) + lam * np.sum(push * push))


def sgcl_loss_grad(c: np.ndarray, pos: np.ndarray, neg: np.ndarray, lam: float) -> np.ndarray:
    """Derivative of sgcl_loss with respect to C."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    c, pos, neg = np.asarray(c), np.asarray(pos), np.asarray(neg)
    if not (c.shape == pos.shape == neg.shape):
        raise ValueError(f"shape mismatch: C {c.shape}, pos {pos.shape}, neg {neg.shape}")
    return -2.0 * (pos * pos) * (1.0 - c) + 2.0 * lam * (neg * neg) * c


@dataclass
class ObjectiveInfo:
    """Per-direction diagnostics from one symmetric objective evaluation."""

    loss_ij: float
    loss_ji: float
    lam: float
    pos_ij: np.ndarray
    pos_ji: np.ndarray
    sim_ij: SimilarityMatrix
    sim_ji: SimilarityMatrix


def _direction(
    hn_a: np.ndarray, hn_b: np.ndarray, g_a, smoother: SmootherSpec, lam: float
) -> tuple[float, np.ndarray, np.ndarray, SimilarityMatrix]:
    """Loss, dC, and pair matrix for one direction (rows = nodes of view a)."""
    n = hn_a.shape[0]
    pos = smoother.smooth(identity_pairs(n, dtype=hn_a.dtype), g_a)
    neg = negatives(pos)
    sim = similarity(hn_a, hn_b)
    loss = sgcl_loss(sim.normalized, pos, neg, lam)
    d_c = sgcl_loss_grad(sim.normalized, pos, neg, lam)
    return loss, d_c, pos, sim


def symmetric_objective(
    view_i: View,
    view_j: View,
    params: EncoderParams,
    smoother: SmootherSpec,
    lam: float | None = None,
) -> tuple[float, list[np.ndarray], ObjectiveInfo]:
    """J = (L(i,j) + L(j,i)) / 2 and its gradients w.r.t. the encoder weights.

    Each direction smooths the identity positives with its own view's graph.
    Gradients come back as a list aligned with ``params.arrays()``.
    """
    if view_i.graph.num_nodes != view_j.graph.num_nodes:
        raise ValueError("views must share the batch node order")
    h_i, cache_i = gcn_forward(view_i.graph, view_i.features, params, view=0)
    h_j, cache_j = gcn_forward(view_j.graph, view_j.features, params, view=1)
    hn_i, ncache_i = l2_normalize_rows(h_i)
    hn_j, ncache_j = l2_normalize_rows(h_j)

    n = hn_i.shape[0]
    lam_val = lam if lam is not None else 1.0 / (2.0 * n)
    if lam_val < 0:
        raise ValueError(f"lambda must be >= 0, got {lam_val}")

    loss_ij, d_c_ij, pos_ij, sim_ij = _direction(hn_i, hn_j, view_i.graph, smoother, lam_val)
    loss_ji, d_c_ji, pos_ji, sim_ji = _direction(hn_j, hn_i, view_j.graph, smoother, lam_val)
    j_val = 0.5 * (loss_ij + loss_ji)

    d_m_ij = minmax_backward(0.5 * d_c_ij, sim_ij.normalized, sim_ij.record)
    d_m_ji = minmax_backward(0.5 * d_c_ji, sim_ji.normalized, sim_ji.record)
    d_hn_i = d_m_ij @ hn_j + d_m_ji.T @ hn_j
    d_hn_j = d_m_ij.T @ hn_i + d_m_ji @ hn_i

    d_h_i = l2_normalize_rows_backward(ncache_i, d_hn_i)
    d_h_j = l2_normalize_rows_backward(ncache_j, d_hn_j)
    d_w1_i, d_w2_i = gcn_backward(cache_i, d_h_i)
    d_w1_j, d_w2_j = gcn_backward(cache_j, d_h_j)

    if params.shared:
        grads = [d_w1_i + d_w1_j, d_w2_i + d_w2_j]
    else:
        grads = [d_w1_i, d_w2_i, d_w1_j, d_w2_j]
    info = ObjectiveInfo(loss_ij, loss_ji, lam_val, pos_ij, pos_ji, sim_ij, sim_ji)
    return j_val, grads, info


# -- InfoNCE reference baseline -------------------------------------------------


def infonce_from_similarities(s: np.ndarray, temperature: float) -> float:
    """Mean softmax cross-entropy with the diagonal as the positive logit.

    Row-wise max subtraction guards against overflow, so the value is
    invariant under adding a constant to all logits.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {s.shape}")
    logits = s / temperature
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=1))
    diag = np.diagonal(shifted)
    return float(np.mean(log_z - diag))


def infonce_loss(h_i: np.ndarray, h_j: np.ndarray, temperature: float) -> float:
    """InfoNCE over cosine similarities of row-normalized embeddings."""
    hn_i, _ = l2_normalize_rows(np.asarray(h_i, dtype=np.float64))
    hn_j, _ = l2_normalize_rows(np.asarray(h_j, dtype=np.float64))
    if hn_i.shape != hn_j.shape:
        raise ValueError(f"embedding shapes {hn_i.shape} and {hn_j.shape} differ")
    return infonce_from_similarities(cosine_matrix(hn_i, hn_j), temperature)


def _infonce_direction(hn_a: np.ndarray, hn_b: np.ndarray, temperature: float):
    s = cosine_matrix(hn_a, hn_b)
    logits = s / temperature
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = s.shape[0]
    loss = float(np.mean(np.log(exp.sum(axis=1)) - np.diagonal(shifted)))
    d_s = (probs - np.eye(n, dtype=s.dtype)) / (temperature * n)
    return loss, d_s


def symmetric_infonce(
    view_i: View, view_j: View, params: EncoderParams, temperature: float
) -> tuple[float, list[np.ndarray]]:
    """Trainable symmetric InfoNCE: J = (L(i,j) + L(j,i)) / 2 plus gradients."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    h_i, cache_i = gcn_forward(view_i.graph, view_i.features, params, view=0)
    h_j, cache_j = gcn_forward(view_j.graph, view_j.features, params, view=1)
    hn_i, ncache_i = l2_normalize_rows(h_i)
    hn_j, ncache_j = l2_normalize_rows(h_j)
    loss_ij, d_s_ij = _infonce_direction(hn_i, hn_j, temperature)
    loss_ji, d_s_ji = _infonce_direction(hn_j, hn_i, temperature)
    j_val = 0.5 * (loss_ij + loss_ji)
    d_hn_i = 0.5 * (d_s_ij @ hn_j + d_s_ji.T @ hn_j)
    d_hn_j = 0.5 * (d_s_ij.T @ hn_i + d_s_ji @ hn_i)
    d_h_i = l2_normalize_rows_backward(ncache_i, d_hn_i)
    d_h_j = l2_normalize_rows_backward(ncache_j, d_hn_j)
    d_w1_i, d_w2_i = gcn_backward(cache_i, d_h_i)
    d_w1_j, d_w2_j = gcn_backward(cache_j, d_h_j)
    if params.shared:
        return j_val, [d_w1_i + d_w1_j, d_w2_i + d_w2_j]
    return j_val, [d_w1_i, d_w2_i, d_w1_j, d_w2_j]
