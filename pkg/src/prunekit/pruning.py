"""Pruning plans: choosing what to keep and applying the choice.

``make_plan`` keeps the highest-scoring indices ("ordered") or the lowest
("reversed"); ties prefer the lower index in both directions. The kept count
is max(1, ceil((1 - ratio) * population)), so selections are prefix-stable:
for fixed scores, kept(r2) is a subset of kept(r1) whenever r2 > r1.

``apply_plan`` removes whole classes and remaps surviving labels onto a
contiguous range (class granularity), or removes individual rows leaving
labels untouched (sample granularity). Survivor order is always the original
sample order.
"""

import math

import numpy as np

from .data_io import ClassManifest, FeatureSet, PruningPlan, ScoreVector
from .errors import DataError


def make_plan(scores: ScoreVector, ratio: float, order: str) -> PruningPlan:
    if not (0.0 <= ratio < 1.0):
        raise DataError(f"ratio must lie in [0, 1), got {ratio}")
    if order not in ("ordered", "reversed"):
        raise DataError(f"order must be 'ordered' or 'reversed', got {order!r}")
    s = scores.scores
    n = s.size
    n_keep = max(1, math.ceil((1.0 - ratio) * n))
    if order == "ordered":
        ranked = np.argsort(-s, kind="stable")
    else:
        ranked = np.argsort(s, kind="stable")
    kept = sorted(int(i) for i in ranked[:n_keep])
    dropped = sorted(int(i) for i in ranked[n_keep:])
    return PruningPlan(scores.granularity, float(ratio), order, kept, dropped)


def apply_plan(features: FeatureSet, manifest: ClassManifest, plan: PruningPlan):
    """Returns the pruned (FeatureSet, ClassManifest)."""
    if features.labels is None:
        raise DataError("apply_plan requires labeled features")
    labels = features.labels.astype(np.int64)

    if plan.granularity == "class":
        if plan.population != manifest.n_classes:
            raise DataError(
                f"plan covers {plan.population} classes, manifest declares {manifest.n_classes}"
            )
        kept = np.array(plan.kept, dtype=np.int64)
        lut = np.full(manifest.n_classes, -1, dtype=np.int64)
        lut[kept] = np.arange(kept.size)
        mask = lut[labels] >= 0
        new_fs = FeatureSet(features.features[mask], lut[labels[mask]].astype(np.uint32))
        counts = [manifest.per_class_counts[c] for c in plan.kept]
        names = None if manifest.class_names is None else [manifest.class_names[c] for c in plan.kept]
        return new_fs, ClassManifest(kept.size, counts, names)

    if plan.population != features.n_samples:
        raise DataError(
            f"plan covers {plan.population} samples, feature set has {features.n_samples}"
        )
    kept = np.array(plan.kept, dtype=np.int64)
    new_fs = FeatureSet(features.features[kept], features.labels[kept])
    counts = np.bincount(labels[kept], minlength=manifest.n_classes).tolist()
    return new_fs, ClassManifest(manifest.n_classes, counts, manifest.class_names)


def keep_samples(features: FeatureSet, manifest: ClassManifest, mask):
    """Row-mask variant of sample pruning (used by pseudo-class plans)."""
    if features.labels is None:
        raise DataError("labeled features required")
    mask = np.asarray(mask, dtype=bool)
    new_fs = FeatureSet(features.features[mask], features.labels[mask])
    counts = np.bincount(new_fs.labels.astype(np.int64), minlength=manifest.n_classes).tolist()
    return new_fs, ClassManifest(manifest.n_classes, counts, manifest.class_names)


def compact_classes(features: FeatureSet, manifest: ClassManifest):
    """Drop empty classes and remap labels contiguously.

    Returns (features, manifest, old_to_new mapping).
    """
    if features.labels is None:
        raise DataError("labeled features required")
    counts = np.bincount(features.labels.astype(np.int64), minlength=manifest.n_classes)
    keep = np.flatnonzero(counts > 0)
    if keep.size == 0:
        raise DataError("all classes are empty")
    lut = np.full(manifest.n_classes, -1, dtype=np.int64)
    lut[keep] = np.arange(keep.size)
    new_fs = FeatureSet(features.features, lut[features.labels.astype(np.int64)].astype(np.uint32))
    names = None if manifest.class_names is None else [manifest.class_names[c] for c in keep]
    new_manifest = ClassManifest(int(keep.size), counts[keep].tolist(), names)
    return new_fs, new_manifest, {int(c): int(lut[c]) for c in keep}
