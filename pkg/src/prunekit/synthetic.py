"""Seeded synthetic source/target classification tasks.

Source classes are isotropic unit-variance Gaussian clusters whose means are
drawn on a seeded random frame and rescaled so the minimum pairwise distance
equals the requested separation. The target reuses the first ``n_relevant``
source means, each perturbed by a random direction of fixed norm, which makes
"relevant source classes" ground truth by construction.

Every draw comes from a per-(seed, purpose, class) Philox stream, so adding
classes or resizing the target never perturbs the samples of earlier classes.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .data_io import ClassManifest, FeatureSet
from .errors import SchemaError
from .rand import stream


@dataclass
class TaskSpec:
    n_source_classes: int
    n_relevant: int
    samples_per_class: int
    dim: int
    class_sep: float
    target_shift: float
    n_target_per_class: int
    seed: int

    def __post_init__(self):
        if min(self.n_source_classes, self.samples_per_class, self.dim, self.n_target_per_class) < 1:
            raise SchemaError("counts and dim must be positive")
        if not (0 <= self.n_relevant <= self.n_source_classes):
            raise SchemaError("n_relevant must lie in [0, n_source_classes]")
        if self.class_sep <= 0 or self.target_shift < 0:
            raise SchemaError("class_sep must be > 0 and target_shift >= 0")


@dataclass
class GeneratedTask:
    source: FeatureSet
    source_manifest: ClassManifest
    target: FeatureSet
    target_manifest: ClassManifest
    relevant_ids: list


def save_task_spec(spec: TaskSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(spec), fh, indent=2)
        fh.write("\n")


def load_task_spec(path) -> TaskSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid task spec JSON: {exc}") from exc
    fields = {
        "n_source_classes", "n_relevant", "samples_per_class", "dim",
        "class_sep", "target_shift", "n_target_per_class", "seed",
    }
    if not isinstance(doc, dict) or set(doc) != fields:
        raise SchemaError(f"task spec must contain exactly the keys {sorted(fields)}")
    return TaskSpec(**doc)


def class_means(spec: TaskSpec):
    """Source and target generating means (float64), for oracles and tests."""
    raw = np.stack(
        [stream(spec.seed, "class-mean", i).standard_normal(spec.dim) for i in range(spec.n_source_classes)]
    )
    if spec.n_source_classes > 1:
        diffs = raw[:, None, :] - raw[None, :, :]
        dist = np.sqrt((diffs * diffs).sum(axis=2))
        min_dist = dist[np.triu_indices(spec.n_source_classes, k=1)].min()
        source_means = raw * (spec.class_sep / min_dist)
    else:
        source_means = raw
    target_means = []
    for c in range(spec.n_relevant):
        direction = stream(spec.seed, "target-shift", c).standard_normal(spec.dim)
        direction = direction / np.sqrt((direction * direction).sum())
        target_means.append(source_means[c] + direction * spec.target_shift)
    return source_means, np.array(target_means).reshape(spec.n_relevant, spec.dim)


def gen_task(spec: TaskSpec) -> GeneratedTask:
    """Generate the labeled source and target feature sets for a task spec."""
    source_means, target_means = class_means(spec)

    src_rows, src_labels = [], []
    for c in range(spec.n_source_classes):
        noise = stream(spec.seed, "class-noise", c).standard_normal((spec.samples_per_class, spec.dim))
        src_rows.append(noise + source_means[c])
        src_labels.append(np.full(spec.samples_per_class, c, dtype=np.uint32))
    source = FeatureSet(np.concatenate(src_rows).astype(np.float32), np.concatenate(src_labels))
    source_manifest = ClassManifest(
        spec.n_source_classes, [spec.samples_per_class] * spec.n_source_classes
    )

    tgt_rows, tgt_labels = [], []
    for c in range(spec.n_relevant):
        noise = stream(spec.seed, "target-noise", c).standard_normal((spec.n_target_per_class, spec.dim))
        tgt_rows.append(noise + target_means[c])
        tgt_labels.append(np.full(spec.n_target_per_class, c, dtype=np.uint32))
    if spec.n_relevant:
        target = FeatureSet(np.concatenate(tgt_rows).astype(np.float32), np.concatenate(tgt_labels))
    else:
        target = FeatureSet(np.zeros((0, spec.dim), dtype=np.float32), np.zeros(0, dtype=np.uint32))
    target_manifest = ClassManifest(
        max(spec.n_relevant, 1), [spec.n_target_per_class] * spec.n_relevant or [0]
    )

    return GeneratedTask(source, source_manifest, target, target_manifest, list(range(spec.n_relevant)))
