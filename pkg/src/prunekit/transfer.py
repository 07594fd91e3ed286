"""Pretrain/finetune harness and pruning-ratio sweeps.

A sweep scores the source once (on a surrogate model trained on the full
source), turns the scores into one plan per ratio, then for every
(ratio, seed) cell pretrains a source model on the pruned data and finetunes
it on the target by linear probe or full finetune. Per-ratio accuracies are
seed means; the no-prune baseline is the ratio-0 entry of the same sweep.

A ratio is "winning" when its accuracy is at least the baseline (minus an
optional epsilon, default 0); the best winning ratio is the largest one.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import scoring
from .data_io import ClassManifest, FeatureSet, TrajectoryReport, compute_winning
from .errors import DataError, UsageError
from .nn import MlpModel, TrainConfig, accuracy, extract_features, init_model, train
from .pruning import apply_plan, compact_classes, keep_samples, make_plan
from .rand import stream

MODES = ("lp", "ff")


@dataclass
class HarnessConfig:
    """Architectures, training settings, and sweep options for a trajectory.

    The defaults are the reference desk-scale setup: a narrow 3-unit
    representation bottleneck and a non-trivial weight decay make the source
    classes compete for capacity, which is what lets class pruning help (or
    hurt, in reversed order) instead of everything saturating.
    """

    surrogate_hidden: tuple = (16,)
    hidden: tuple = (16, 3)
    surrogate_train: TrainConfig = field(
        default_factory=lambda: TrainConfig(12, 64, 0.02, momentum=0.9, weight_decay=5e-4)
    )
    pretrain: TrainConfig = field(
        default_factory=lambda: TrainConfig(20, 64, 0.02, momentum=0.9, weight_decay=0.03)
    )
    probe: TrainConfig = field(default_factory=lambda: TrainConfig(40, 64, 0.05, momentum=0.9))
    finetune: TrainConfig = field(default_factory=lambda: TrainConfig(15, 64, 0.02, momentum=0.9))
    k: int = 2000
    kmeans_iters: int = 50
    kmeans_tol: float = 1e-6
    epsilon: float = 0.0
    test_frac: float = 0.2
    jobs: int = 1


def pretrain(source: FeatureSet, manifest: ClassManifest, hidden, config: TrainConfig) -> MlpModel:
    """Train a classifier over the (possibly pruned) source from scratch."""
    dims = [source.dim] + list(hidden) + [manifest.n_classes]
    return train(init_model(dims, config.seed), source, config)[0]


def split_target(labels, seed: int, test_frac: float = 0.2):
    """Seeded stratified 80/20 split; returns sorted (train_idx, test_idx)."""
    labels = np.asarray(labels, dtype=np.int64)
    train_idx, test_idx = [], []
    for c in range(int(labels.max()) + 1):
        idx = np.flatnonzero(labels == c)
        if idx.size < 5:
            raise DataError(f"class {c} has {idx.size} samples; need >= 5 to split")
        perm = idx[stream(seed, "split", c).permutation(idx.size)]
        n_test = max(1, round(idx.size * test_frac))
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def _subset(fs: FeatureSet, idx) -> FeatureSet:
    return FeatureSet(fs.features[idx], None if fs.labels is None else fs.labels[idx])


def linear_probe(model: MlpModel, target: FeatureSet, config: TrainConfig):
    """Train a fresh linear head on frozen representations.

    Representations are extracted once and cached; the extractor is never
    touched. Returns (head model, held-out accuracy).
    """
    if target.labels is None:
        raise DataError("labeled target required")
    reps = extract_features(model, target)
    n_classes = int(target.labels.max()) + 1
    train_idx, test_idx = split_target(target.labels, config.seed)
    head = init_model([reps.dim, n_classes], config.seed)
    head, _ = train(head, _subset(reps, train_idx), config)
    return head, accuracy(head, _subset(reps, test_idx))


def full_finetune(model: MlpModel, target: FeatureSet, config: TrainConfig):
    """Finetune every parameter from the pretrained extractor.

    The head is re-initialised to the target class count. Returns
    (finetuned model, held-out accuracy).
    """
    if target.labels is None:
        raise DataError("labeled target required")
    n_classes = int(target.labels.max()) + 1
    penult = model.layer_dims[-2]
    fresh_head = init_model([penult, n_classes], config.seed)
    start = MlpModel(
        list(model.layer_dims[:-1]) + [n_classes],
        [w.copy() for w in model.weights[:-1]] + [fresh_head.weights[0]],
        [b.copy() for b in model.biases[:-1]] + [fresh_head.biases[0]],
        list(model.seed_lineage),
    )
    train_idx, test_idx = split_target(target.labels, config.seed)
    tuned, _ = train(start, _subset(target, train_idx), config)
    return tuned, accuracy(tuned, _subset(target, test_idx))


@dataclass
class ScoringResult:
    scores: scoring.ScoreVector
    pseudo_labels: np.ndarray = None  # source row -> cluster, fm only
    cluster: scoring.ClusterModel = None


def score_source(
    method: str,
    source: FeatureSet,
    manifest: ClassManifest,
    target: FeatureSet,
    surrogate: MlpModel,
    cfg: HarnessConfig,
    score_seed: int,
) -> ScoringResult:
    """Compute the (single) score vector a sweep reuses across ratios."""
    if method == "lm":
        return ScoringResult(scoring.lm_scores(surrogate, target, manifest.n_classes))
    if method == "fm":
        src_reps = extract_features(surrogate, source)
        tgt_reps = extract_features(surrogate, target)
        cluster = scoring.kmeans_fit(
            src_reps, cfg.k, seed=score_seed, max_iters=cfg.kmeans_iters, tol=cfg.kmeans_tol
        )
        pseudo = scoring.kmeans_assign(cluster, src_reps)
        return ScoringResult(scoring.fm_scores(cluster, tgt_reps), pseudo, cluster)
    if method == "grand":
        return ScoringResult(scoring.grand_scores(surrogate, source))
    if method == "el2n":
        return ScoringResult(scoring.el2n_scores(surrogate, source))
    if method == "moderate":
        reps = extract_features(surrogate, source)
        return ScoringResult(scoring.moderate_scores(reps, manifest.n_classes))
    if method == "random":
        return ScoringResult(scoring.random_scores(source.n_samples, score_seed))
    raise UsageError(f"unknown method {method!r}")


def effective_order(method: str, order: str) -> str:
    """Plan direction for a method: inverted when low scores mean keep-first."""
    if scoring.KEEP_HIGH[method]:
        return order
    return "reversed" if order == "ordered" else "ordered"


def prune_source(
    source: FeatureSet,
    manifest: ClassManifest,
    result: ScoringResult,
    ratio: float,
    order: str,
):
    """Plan at a ratio and apply it; returns (features, manifest, plan)."""
    method = result.scores.method
    plan = make_plan(result.scores, ratio, effective_order(method, order))
    if method == "fm":
        mask = np.isin(result.pseudo_labels, np.array(plan.kept, dtype=np.int64))
        fs, mf = keep_samples(source, manifest, mask)
        fs, mf, _ = compact_classes(fs, mf)
        return fs, mf, plan
    fs, mf = apply_plan(source, manifest, plan)
    if plan.granularity == "sample":
        fs, mf, _ = compact_classes(fs, mf)
    return fs, mf, plan


def run_trajectory(
    source: FeatureSet,
    source_manifest: ClassManifest,
    target: FeatureSet,
    method: str,
    mode: str,
    ratios,
    seeds,
    cfg: HarnessConfig = None,
    order: str = "ordered",
) -> TrajectoryReport:
    """Sweep pruning ratios and report per-ratio mean downstream accuracy.

    Output bytes depend only on the inputs, never on ``cfg.jobs``.
    """
    cfg = cfg or HarnessConfig()
    if method not in scoring.METHODS:
        raise UsageError(f"unknown method {method!r}")
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}")
    ratios = [float(r) for r in ratios]
    if not ratios or ratios != sorted(set(ratios)) or not all(0.0 <= r < 1.0 for r in ratios):
        raise UsageError("ratios must be ascending, unique, and in [0, 1)")
    if ratios[0] != 0.0:
        raise UsageError("ratios must start at 0 (the no-prune baseline)")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise UsageError("at least one seed required")

    score_seed = seeds[0]
    surrogate = None
    if method != "random":
        surrogate = pretrain(
            source,
            source_manifest,
            cfg.surrogate_hidden,
            replace(cfg.surrogate_train, seed=score_seed),
        )
    result = score_source(method, source, source_manifest, target, surrogate, cfg, score_seed)

    pruned = [prune_source(source, source_manifest, result, r, order)[:2] for r in ratios]

    def cell(args):
        ri, seed = args
        fs, mf = pruned[ri]
        model = pretrain(fs, mf, cfg.hidden, replace(cfg.pretrain, seed=seed))
        if mode == "lp":
            return linear_probe(model, target, replace(cfg.probe, seed=seed))[1]
        return full_finetune(model, target, replace(cfg.finetune, seed=seed))[1]

    jobs = [(ri, seed) for ri in range(len(ratios)) for seed in seeds]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            accs = list(pool.map(cell, jobs))
    else:
        accs = [cell(j) for j in jobs]

    cells = [
        {"ratio": ratios[ri], "seed": seed, "accuracy": acc}
        for (ri, seed), acc in zip(jobs, accs)
    ]
    means = [
        sum(accs[ri * len(seeds) : (ri + 1) * len(seeds)]) / len(seeds)
        for ri in range(len(ratios))
    ]
    baseline = means[0]
    winning, best = compute_winning(ratios, means, baseline, cfg.epsilon)
    meta = {
        "method": method,
        "mode": mode,
        "order": order,
        "seeds": seeds,
        "epsilon": cfg.epsilon,
        "cells": cells,
    }
    return TrajectoryReport(ratios, means, baseline, winning, best, meta)


def report_csv(report: TrajectoryReport) -> str:
    """CSV table of the per-cell results (ratio, seed, accuracy, mode, method)."""
    method = report.meta.get("method", "")
    mode = report.meta.get("mode", "")
    lines = ["ratio,seed,accuracy,mode,method"]
    for cell in report.meta.get("cells", []):
        lines.append(f"{cell['ratio']},{cell['seed']},{cell['accuracy']},{mode},{method}")
    return "\n".join(lines) + "\n"
