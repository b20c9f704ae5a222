"""Linear-probe classification, geodesic-proximity analysis, and metrics.

The geodesic experiment scores how far a model's predicted positive lands
from the true positive: for each anchor row of the evaluation similarity
matrix, take the argmax column and measure the hop distance between the two
nodes on the original (unaugmented) graph. Predictions in a different
connected component are excluded from the mean and counted instead of being
assigned a sentinel, which would let component structure dominate.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentSpec
from .datasets import Dataset, KarimiSpec, SplitSpec, gen_karimi, make_splits, subsample_nodes
from .encoder import EncoderParams, gcn_forward, l2_normalize_rows
from .graph import Graph, bfs_distances
from .objective import LossConfig, SimilarityMatrix, similarity
from .samplers import SamplerSpec
from .seeding import derive_seed
from .smoothing import SmootherSpec
from .training import TrainConfig, train

SWEEP_VARIANTS = ("binary", "taubin", "bilateral", "diffusion")
SWEEP_CSV_HEADER = "h,variant,seed,mean_geodesic,excluded_pairs"


# -- linear probe ---------------------------------------------------------------


@dataclass
class ProbeConfig:
    l2_reg: float = 1e-4
    steps: int = 5000
    lr: float = 0.01
    repeats: int = 5
    seed: int = 0
    normalize: bool = True  # row-normalize embeddings (their scale is cosine-trained noise)

    def validate(self) -> None:
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.l2_reg < 0:
            raise ValueError(f"l2_reg must be >= 0, got {self.l2_reg}")
        if self.lr <= 0 or self.repeats < 1:
            raise ValueError("lr must be positive and repeats >= 1")


@dataclass
class ProbeResult:
    mean: float
    std: float
    accuracies: list[float]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def logreg_loss_and_grad(
    w: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    l2_reg: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with an l2 penalty on the weights (not the bias)."""
    n = x.shape[0]
    probs = _softmax(x @ w + b)
    nll = -np.mean(np.log(np.maximum(probs[np.arange(n), y], 1e-300)))
    loss = nll + 0.5 * l2_reg * float(np.sum(w * w))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    return loss, x.T @ delta + l2_reg * w, delta.sum(axis=0)


def fit_logistic_regression(
    x: np.ndarray,
    y: np.ndarray,
    num_classes: int,
    steps: int = 5000,
    lr: float = 0.01,
    l2_reg: float = 1e-4,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Full-batch gradient descent; returns weights, bias, and the loss trace."""
    w = np.zeros((x.shape[1], num_classes), dtype=np.float64)
    b = np.zeros(num_classes, dtype=np.float64)
    losses = []
    for _ in range(steps):
        loss, d_w, d_b = logreg_loss_and_grad(w, b, x, y, l2_reg)
        losses.append(loss)
        w -= lr * d_w
        b -= lr * d_b
    return w, b, losses


def linear_probe(
    embeddings: np.ndarray,
    labels: np.ndarray,
    splits: SplitSpec,
    cfg: ProbeConfig | None = None,
) -> ProbeResult:
    """Frozen-embedding classification accuracy, mean over split reshuffles.

    The first repeat uses ``splits`` as given; later repeats redraw splits
    with the same ratios from seeds derived from ``cfg.seed``.
    """
    cfg = cfg or ProbeConfig()
    cfg.validate()
    if labels is None:
        raise ValueError("linear probe needs labels")
    x = np.asarray(embeddings, dtype=np.float64)
    n = x.shape[0]
    splits.validate(n)
    if cfg.normalize:
        x, _ = l2_normalize_rows(x)
    num_classes = int(labels.max()) + 1
    ratios = splits.ratios(n)
    accs = []
    for r in range(cfg.repeats):
        sp = splits if r == 0 else make_splits(n, ratios, derive_seed(cfg.seed, f"probe-split-{r}"))
        y_train = labels[sp.train]
        if np.unique(y_train).size < 2:
            raise ValueError("train split contains a single class")
        w, b, _ = fit_logistic_regression(
            x[sp.train], y_train, num_classes, cfg.steps, cfg.lr, cfg.l2_reg
        )
        pred = np.argmax(x[sp.test] @ w + b, axis=1)
        accs.append(float(np.mean(pred == labels[sp.test])))
    return ProbeResult(mean=float(np.mean(accs)), std=float(np.std(accs)), accuracies=accs)


# -- geodesic proximity analysis -------------------------------------------------


def predicted_positive(c_row: np.ndarray) -> int:
    """Argmax column of one anchor row; ties break to the first occurrence."""
    c_row = np.asarray(c_row)
    if c_row.size == 0:
        raise ValueError("empty similarity row")
    return int(np.argmax(c_row))


def mean_geodesic(g: Graph, c: np.ndarray) -> tuple[float, int]:
    """Mean hop distance between predicted and true positives.

    Returns (mean over connected pairs, number of excluded disconnected
    pairs). Raises if every predicted pair is disconnected.
    """
    c = np.asarray(c)
    if c.shape != (g.num_nodes, g.num_nodes):
        raise ValueError(f"similarity shape {c.shape} does not match n={g.num_nodes}")
    total = 0.0
    used = 0
    excluded = 0
    for t in range(g.num_nodes):
        q = predicted_positive(c[t])
        dist = bfs_distances(g, t)
        if dist[q] < 0:
            excluded += 1
        else:
            total += dist[q]
            used += 1
    if used == 0:
        raise ValueError("all predicted pairs are disconnected")
    return total / used, excluded


def eval_similarity(ds: Dataset, params: EncoderParams) -> SimilarityMatrix:
    """Similarity between the two view encoders on the clean, full graph.

    The whole graph is treated as one batch with identity positives and no
    augmentation; with shared weights both sides coincide.
    """
    x = ds.features.astype(params.W1.dtype, copy=False)
    h_i, _ = gcn_forward(ds.graph, x, params, view=0)
    h_j, _ = gcn_forward(ds.graph, x, params, view=1)
    hn_i, _ = l2_normalize_rows(h_i)
    hn_j, _ = l2_normalize_rows(h_j)
    return similarity(hn_i, hn_j)


# -- sweep over homophily levels ---------------------------------------------


@dataclass
class SweepConfig:
    """Shape of one geodesic sweep: data generation plus the trainer template.

    Encoders default to per-view weights here: with shared weights the clean
    evaluation views coincide and every anchor trivially predicts itself,
    which empties the experiment.
    """

    n: int = 5000
    m: int = 2
    minority_fraction: float = 0.5
    feature_dim: int = 16
    class_offset: float = 0.5
    subsample: int = 500
    epochs: int = 200
    lr: float = 1e-3
    hidden_dim: int = 64
    out_dim: int = 32
    shared_encoder: bool = False
    smoother: SmootherSpec = field(default_factory=SmootherSpec)
    augment: AugmentSpec = field(default_factory=AugmentSpec)
    threads: int = 1


@dataclass
class SweepCell:
    h: float
    variant: str
    seed: int
    mean_geodesic: float
    excluded_pairs: int


@dataclass
class GeodesicReport:
    """All sweep cells plus the fixed policies that shaped them."""

    cells: list[SweepCell]
    h_values: list[float]
    variants: list[str]
    seeds: list[int]
    disconnected_policy: str = "excluded"

    def seed_mean(self, h: float, variant: str) -> float:
        vals = [c.mean_geodesic for c in self.cells if c.h == h and c.variant == variant]
        if not vals:
            raise KeyError(f"no cells for h={h}, variant={variant}")
        return float(np.mean(vals))

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(SWEEP_CSV_HEADER + "\n")
            for c in self.cells:
                fh.write(f"{c.h!r},{c.variant},{c.seed},{c.mean_geodesic!r},{c.excluded_pairs}\n")


def variant_objective(variant: str, base: SmootherSpec) -> tuple[SmootherSpec, LossConfig]:
    """Map a sweep variant name onto smoother and loss settings."""
    if variant == "binary":
        return base, LossConfig(baseline="binary")
    if variant in ("taubin", "bilateral", "diffusion"):
        return replace(base, kind=variant), LossConfig(baseline="sgcl")
    raise ValueError(f"unknown sweep variant {variant!r}")


def _sweep_point(cfg: SweepConfig, h: float, seed: int, variants: list[str]) -> list[SweepCell]:
    """All variants for one (h, seed) pair, trained on the same subsample."""
    spec = KarimiSpec(
        n=cfg.n,
        m=cfg.m,
        h=h,
        minority_fraction=cfg.minority_fraction,
        feature_dim=cfg.feature_dim,
        class_offset=cfg.class_offset,
        seed=derive_seed(seed, f"karimi-h{h}"),
    )
    ds = gen_karimi(spec, dtype=np.float64)
    sub = subsample_nodes(ds, cfg.subsample, derive_seed(seed, f"subsample-h{h}"))
    out = []
    for variant in variants:
        smoother, loss = variant_objective(variant, cfg.smoother)
        train_cfg = TrainConfig(
            epochs=cfg.epochs,
            lr=cfg.lr,
            sampler=SamplerSpec(kind="node", budget=cfg.subsample),
            augment_i=cfg.augment,
            augment_j=cfg.augment,
            smoother=smoother,
            loss=loss,
            hidden_dim=cfg.hidden_dim,
            out_dim=cfg.out_dim,
            shared_encoder=cfg.shared_encoder,
            num_batches=1,
            seed=derive_seed(seed, f"train-{variant}-h{h}"),
            dtype=np.float64,
        )
        params, _ = train(sub, train_cfg)
        sim = eval_similarity(sub, params)
        mean, excluded = mean_geodesic(sub.graph, sim.normalized)
        out.append(SweepCell(h=h, variant=variant, seed=seed, mean_geodesic=mean, excluded_pairs=excluded))
    return out


def geodesic_sweep(
    h_values: list[float] | None = None,
    variants: list[str] | None = None,
    seeds: list[int] | None = None,
    cfg: SweepConfig | None = None,
) -> GeodesicReport:
    """Train every (h, variant, seed) cell and collect geodesic statistics.

    Cells for distinct (h, seed) pairs are independent and may run in a
    process pool (``cfg.threads``); within a pair all variants share the
    same generated graph and subsample so the comparison is paired.
    """
    h_values = [round(0.1 * i, 1) for i in range(10)] if h_values is None else list(h_values)
    variants = ["binary", "taubin"] if variants is None else list(variants)
    seeds = [0] if seeds is None else list(seeds)
    cfg = cfg or SweepConfig()
    if not set(variants) <= set(SWEEP_VARIANTS):
        raise ValueError(f"variants must be among {SWEEP_VARIANTS}, got {variants}")
    points = [(h, s) for h in h_values for s in seeds]
    results: dict[tuple[float, int], list[SweepCell]] = {}
    if cfg.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {
                pool.submit(_sweep_point, cfg, h, s, variants): (h, s) for h, s in points
            }
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
    else:
        for h, s in points:
            results[(h, s)] = _sweep_point(cfg, h, s, variants)
    cells = [cell for key in points for cell in results[key]]
    return GeodesicReport(cells=cells, h_values=h_values, variants=variants, seeds=seeds)


# -- metrics emission -----------------------------------------------------------


def metric_record(
    task: str, dataset: str, variant: str, seed: int, metric: str, value: float
) -> dict:
    """One JSON-lines metrics record with the stable field set."""
    return {
        "task": task,
        "dataset": dataset,
        "variant": variant,
        "seed": seed,
        "metric": metric,
        "value": value,
    }
