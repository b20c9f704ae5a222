"""Adam optimizer, the epoch loop over sampled batches, and full-graph inference.

One training epoch draws a fresh set of mini-batches, builds two augmented
views per batch, evaluates the symmetric contrastive objective on each, and
takes a single Adam step on the epoch-averaged gradient (per-batch stepping
is available behind ``step_per_batch``). All randomness flows from the config
seed through labeled derived streams, so a (seed, config, dataset) triple
fully determines the run.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentSpec, make_views
from .datasets import Dataset
from .encoder import DivergenceError, EncoderParams, gcn_forward, init_params
from .objective import LossConfig, symmetric_infonce, symmetric_objective
from .samplers import SamplerSpec, batch_stream
from .seeding import derive_seed
from .smoothing import SmootherSpec


@dataclass
class AdamState:
    """First/second moment accumulators with bias-corrected updates."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, arrays: list[np.ndarray], lr: float = 1e-3) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(a, dtype=np.float64) for a in arrays],
            v=[np.zeros_like(a, dtype=np.float64) for a in arrays],
        )


def adam_step(
    arrays: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> list[np.ndarray]:
    """One Adam update; mutates ``state`` and returns the new parameter arrays."""
    if len(arrays) != len(grads) or len(arrays) != len(state.m):
        raise ValueError("parameter/gradient/state counts do not match")
    for a, g in zip(arrays, grads):
        if a.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {a.shape}")
        if not np.isfinite(g).all():
            raise DivergenceError("non-finite gradient passed to the optimizer")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    out = []
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        g64 = g.astype(np.float64, copy=False)
        m *= state.beta1
        m += (1.0 - state.beta1) * g64
        v *= state.beta2
        v += (1.0 - state.beta2) * (g64 * g64)
        step = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        out.append((a - step.astype(a.dtype)).astype(a.dtype))
    return out


@dataclass
class TrainConfig:
    """Everything one training run depends on."""

    epochs: int = 200
    lr: float = 1e-3
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    augment_i: AugmentSpec = field(default_factory=AugmentSpec)
    augment_j: AugmentSpec = field(default_factory=AugmentSpec)
    smoother: SmootherSpec = field(default_factory=SmootherSpec)
    loss: LossConfig = field(default_factory=LossConfig)
    hidden_dim: int = 256
    out_dim: int = 256
    shared_encoder: bool = True
    num_batches: int | None = None  # None: ceil(N / sampler budget)
    step_per_batch: bool = False
    seed: int = 0
    dtype: np.dtype = np.float32

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.hidden_dim < 1 or self.out_dim < 1:
            raise ValueError("encoder dimensions must be >= 1")
        if self.num_batches is not None and self.num_batches < 1:
            raise ValueError("num_batches must be >= 1 when given")
        self.sampler.validate()
        self.augment_i.validate()
        self.augment_j.validate()
        self.smoother.validate()
        self.loss.validate()


@dataclass
class TraceRow:
    epoch: int
    loss: float
    wall_ms: float


def _effective_smoother(cfg: TrainConfig) -> SmootherSpec:
    if cfg.loss.baseline == "binary":
        return replace(cfg.smoother, kind="identity")
    return cfg.smoother


def train(ds: Dataset, cfg: TrainConfig) -> tuple[EncoderParams, list[TraceRow]]:
    """Run the full optimization; returns final params and the loss trace."""
    cfg.validate()
    ds.validate()
    work = Dataset(ds.graph, ds.features.astype(cfg.dtype, copy=False), ds.labels)
    n = work.num_nodes

    params = init_params(
        work.num_features,
        cfg.hidden_dim,
        cfg.out_dim,
        seed=derive_seed(cfg.seed, "encoder-init"),
        shared=cfg.shared_encoder,
        dtype=cfg.dtype,
    )
    arrays = params.arrays()
    state = AdamState.for_params(arrays, lr=cfg.lr)
    num_batches = cfg.num_batches or max(1, math.ceil(n / cfg.sampler.budget))
    smoother = _effective_smoother(cfg)

    trace: list[TraceRow] = []
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        batches = batch_stream(work, cfg.sampler, num_batches, derive_seed(cfg.seed, f"epoch-{epoch}"))
        epoch_loss = 0.0
        acc = [np.zeros_like(a, dtype=np.float64) for a in arrays]
        for b, batch in enumerate(batches):
            rng = np.random.default_rng(derive_seed(cfg.seed, f"epoch-{epoch}/batch-{b}/augment"))
            view_i, view_j = make_views(batch, cfg.augment_i, cfg.augment_j, rng)
            try:
                if cfg.loss.baseline == "infonce":
                    j_val, grads = symmetric_infonce(view_i, view_j, params, cfg.loss.temperature)
                else:
                    j_val, grads, _ = symmetric_objective(view_i, view_j, params, smoother, cfg.loss.lam)
            except DivergenceError as exc:
                raise DivergenceError(f"epoch {epoch}: {exc}") from exc
            if not np.isfinite(j_val):
                raise DivergenceError(f"epoch {epoch}: non-finite loss {j_val}")
            epoch_loss += j_val
            if cfg.step_per_batch:
                arrays = adam_step(arrays, grads, state)
                params = params.replace_arrays(arrays)
            else:
                for a, g in zip(acc, grads):
                    a += g
        if not cfg.step_per_batch:
            mean_grads = [(a / num_batches).astype(cfg.dtype) for a in acc]
            try:
                arrays = adam_step(arrays, mean_grads, state)
            except DivergenceError as exc:
                raise DivergenceError(f"epoch {epoch}: {exc}") from exc
            params = params.replace_arrays(arrays)
        wall_ms = (time.perf_counter() - started) * 1e3
        trace.append(TraceRow(epoch=epoch, loss=epoch_loss / num_batches, wall_ms=wall_ms))
    return params, trace


def embed_full(ds: Dataset, params: EncoderParams) -> np.ndarray:
    """One clean forward pass over the whole graph (no augmentation)."""
    x = ds.features.astype(params.W1.dtype, copy=False)
    h, _ = gcn_forward(ds.graph, x, params, view=0)
    return h


def write_trace_csv(path: str, trace: list[TraceRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,loss,wall_ms\n")
        for row in trace:
            fh.write(f"{row.epoch},{row.loss!r},{row.wall_ms:.3f}\n")
