"""On-disk formats: binary feature files plus JSON manifests/scores/plans/reports.

Feature file (".dpf"), little-endian:
  magic "DPTL" | version u16=1 | flags u16 (bit0 = labels present) |
  n_samples u64 | dim u32 | reserved u32=0 |
  features n*dim float32 row-major | labels n*uint32 (if flagged)

The JSON documents are written with a fixed key order and a trailing
newline, so identical values always produce byte-identical files. Readers
validate every invariant and raise a typed error instead of returning a
malformed value.
"""

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    BadFlagsError,
    BadMagicError,
    LengthMismatchError,
    NonFiniteError,
    SchemaError,
    TruncatedFileError,
    UnsupportedVersionError,
)

MAGIC = b"DPTL"
VERSION = 1
_HEADER = struct.Struct("<4sHHQII")

GRANULARITIES = ("class", "sample")
ORDERS = ("ordered", "reversed")


# ---------------------------------------------------------------------------
# document types


class FeatureSet:
    """Immutable matrix of float32 feature rows with optional uint32 labels."""

    def __init__(self, features, labels=None):
        features = np.ascontiguousarray(features, dtype=np.float32)
        if features.ndim != 2:
            raise SchemaError(f"features must be 2-D, got shape {features.shape}")
        if not np.isfinite(features).all():
            raise NonFiniteError("features contain NaN or Inf")
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.uint32)
            if labels.shape != (features.shape[0],):
                raise SchemaError(
                    f"labels length {labels.shape} does not match {features.shape[0]} samples"
                )
            labels.setflags(write=False)
        features.setflags(write=False)
        self.features = features
        self.labels = labels

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FeatureSet):
            return NotImplemented
        if self.features.shape != other.features.shape:
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.features.tobytes() != other.features.tobytes():
            return False
        if self.labels is not None and self.labels.tobytes() != other.labels.tobytes():
            return False
        return True

    def __repr__(self):
        lab = "labeled" if self.labels is not None else "unlabeled"
        return f"FeatureSet(n={self.n_samples}, dim={self.dim}, {lab})"


@dataclass
class ClassManifest:
    n_classes: int
    per_class_counts: list
    class_names: Optional[list] = None

    def __post_init__(self):
        if self.n_classes < 1:
            raise SchemaError("n_classes must be positive")
        if len(self.per_class_counts) != self.n_classes:
            raise SchemaError("per_class_counts length must equal n_classes")
        if any(c < 0 for c in self.per_class_counts):
            raise SchemaError("per_class_counts must be non-negative")
        if self.class_names is not None and len(self.class_names) != self.n_classes:
            raise SchemaError("class_names length must equal n_classes")


@dataclass
class ScoreVector:
    method: str
    granularity: str
    scores: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise SchemaError(f"granularity must be one of {GRANULARITIES}")
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 1 or self.scores.size == 0:
            raise SchemaError("scores must be a non-empty 1-D sequence")
        if not np.isfinite(self.scores).all():
            raise NonFiniteError("scores contain NaN or Inf")

    def __eq__(self, other):
        if not isinstance(other, ScoreVector):
            return NotImplemented
        return (
            self.method == other.method
            and self.granularity == other.granularity
            and self.seed == other.seed
            and np.array_equal(self.scores, other.scores)
        )

    def __len__(self):
        return self.scores.size


@dataclass
class PruningPlan:
    granularity: str
    ratio: float
    order: str
    kept: list
    dropped: list

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise SchemaError(f"granularity must be one of {GRANULARITIES}")
        if self.order not in ORDERS:
            raise SchemaError(f"order must be one of {ORDERS}")
        if not (0.0 <= self.ratio < 1.0):
            raise SchemaError("ratio must lie in [0, 1)")
        pop = len(self.kept) + len(self.dropped)
        if pop == 0:
            raise SchemaError("plan population is empty")
        if sorted(self.kept) != list(self.kept) or sorted(self.dropped) != list(self.dropped):
            raise SchemaError("kept and dropped must be sorted ascending")
        if set(self.kept) | set(self.dropped) != set(range(pop)) or set(self.kept) & set(self.dropped):
            raise SchemaError("kept and dropped must partition 0..population-1")
        want = max(1, math.ceil((1.0 - self.ratio) * pop))
        if len(self.kept) != want:
            raise SchemaError(f"plan keeps {len(self.kept)} items, ratio {self.ratio} requires {want}")

    @property
    def population(self) -> int:
        return len(self.kept) + len(self.dropped)

    @property
    def label_remap(self) -> dict:
        """Old class index -> new contiguous index, order preserving (class plans)."""
        return {old: new for new, old in enumerate(self.kept)}


@dataclass
class TrajectoryReport:
    ratios: list
    accuracy: list
    baseline_accuracy: float
    winning: list
    best_winning: Optional[float]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.ratios) != len(self.accuracy):
            raise SchemaError("ratios and accuracy must have equal length")
        if not self.ratios:
            raise SchemaError("report must contain at least one ratio")
        if any(not (0.0 <= r < 1.0) for r in self.ratios):
            raise SchemaError("ratios must lie in [0, 1)")
        if list(self.ratios) != sorted(self.ratios) or len(set(self.ratios)) != len(self.ratios):
            raise SchemaError("ratios must be strictly ascending")
        eps = float(self.meta.get("epsilon", 0.0))
        want_winning = [r for r, a in zip(self.ratios, self.accuracy) if a >= self.baseline_accuracy - eps]
        if list(self.winning) != want_winning:
            raise SchemaError("winning set does not match its definition")
        want_best = max(want_winning) if want_winning else None
        if self.best_winning != want_best:
            raise SchemaError("best_winning does not match max(winning)")


def compute_winning(ratios, accuracy, baseline_accuracy, epsilon=0.0):
    """Winning ratios (accuracy within epsilon of baseline) and the best one."""
    winning = [r for r, a in zip(ratios, accuracy) if a >= baseline_accuracy - epsilon]
    return winning, (max(winning) if winning else None)


# ---------------------------------------------------------------------------
# feature file (.dpf)


def write_featureset(fs: FeatureSet, path) -> None:
    flags = 1 if fs.labels is not None else 0
    header = _HEADER.pack(MAGIC, VERSION, flags, fs.n_samples, fs.dim, 0)
    payload = fs.features.astype("<f4", copy=False).tobytes()
    if fs.labels is not None:
        payload += fs.labels.astype("<u4", copy=False).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_featureset(path) -> FeatureSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(
            f"file too short for header: expected >= {_HEADER.size} bytes, got {len(blob)}"
        )
    magic, version, flags, n, dim, reserved = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if flags & ~1:
        raise BadFlagsError(f"unknown flag bits set: {flags:#06x}")
    if reserved != 0:
        raise BadFlagsError(f"reserved field must be 0, got {reserved}")
    has_labels = bool(flags & 1)
    expected = _HEADER.size + n * dim * 4 + (n * 4 if has_labels else 0)
    if len(blob) < expected:
        raise TruncatedFileError(f"truncated payload: expected {expected} bytes, got {len(blob)}")
    if len(blob) > expected:
        raise LengthMismatchError(
            f"declared length mismatch: expected {expected} bytes, got {len(blob)}"
        )
    off = _HEADER.size
    feats = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=off).reshape(n, dim)
    if not np.isfinite(feats).all():
        raise NonFiniteError("feature payload contains NaN or Inf")
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype="<u4", count=n, offset=off + n * dim * 4)
    return FeatureSet(feats.copy(), None if labels is None else labels.copy())


def validate_against_manifest(fs: FeatureSet, manifest: ClassManifest) -> None:
    """Cross-checks a labeled feature set against its class manifest."""
    if fs.labels is not None:
        if fs.labels.size and int(fs.labels.max()) >= manifest.n_classes:
            raise SchemaError(
                f"label {int(fs.labels.max())} out of range for {manifest.n_classes} classes"
            )
        total = sum(manifest.per_class_counts)
        if total != fs.n_samples:
            raise SchemaError(
                f"per_class_counts sum {total} does not match {fs.n_samples} samples"
            )


# ---------------------------------------------------------------------------
# JSON documents


def _dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc


def _expect(cond, msg):
    if not cond:
        raise SchemaError(msg)


def write_manifest(manifest: ClassManifest, path) -> None:
    _dump_json(
        {
            "n_classes": manifest.n_classes,
            "class_names": manifest.class_names,
            "per_class_counts": list(map(int, manifest.per_class_counts)),
        },
        path,
    )


def read_manifest(path) -> ClassManifest:
    doc = _load_json(path)
    _expect(isinstance(doc, dict), "manifest must be a JSON object")
    _expect(
        set(doc) == {"n_classes", "class_names", "per_class_counts"},
        f"unexpected manifest keys {sorted(doc)}",
    )
    _expect(isinstance(doc["n_classes"], int), "n_classes must be an integer")
    counts = doc["per_class_counts"]
    _expect(
        isinstance(counts, list) and all(isinstance(c, int) for c in counts),
        "per_class_counts must be a list of integers",
    )
    names = doc["class_names"]
    _expect(
        names is None or (isinstance(names, list) and all(isinstance(s, str) for s in names)),
        "class_names must be null or a list of strings",
    )
    return ClassManifest(doc["n_classes"], counts, names)


def write_scores(scores: ScoreVector, path) -> None:
    _dump_json(
        {
            "method": scores.method,
            "granularity": scores.granularity,
            "seed": scores.seed,
            "scores": [float(s) for s in scores.scores],
        },
        path,
    )


def read_scores(path) -> ScoreVector:
    doc = _load_json(path)
    _expect(isinstance(doc, dict), "scores must be a JSON object")
    _expect(
        set(doc) == {"method", "granularity", "seed", "scores"},
        f"unexpected scores keys {sorted(doc)}",
    )
    _expect(isinstance(doc["method"], str) and doc["method"], "method must be a non-empty string")
    _expect(doc["seed"] is None or isinstance(doc["seed"], int), "seed must be null or an integer")
    vals = doc["scores"]
    _expect(
        isinstance(vals, list) and all(isinstance(v, (int, float)) for v in vals),
        "scores must be a list of numbers",
    )
    return ScoreVector(doc["method"], doc["granularity"], np.array(vals, dtype=np.float64), doc["seed"])


def write_plan(plan: PruningPlan, path) -> None:
    _dump_json(
        {
            "granularity": plan.granularity,
            "ratio": plan.ratio,
            "order": plan.order,
            "kept": list(map(int, plan.kept)),
            "dropped": list(map(int, plan.dropped)),
        },
        path,
    )


def read_plan(path) -> PruningPlan:
    doc = _load_json(path)
    _expect(isinstance(doc, dict), "plan must be a JSON object")
    _expect(
        set(doc) == {"granularity", "ratio", "order", "kept", "dropped"},
        f"unexpected plan keys {sorted(doc)}",
    )
    for key in ("kept", "dropped"):
        _expect(
            isinstance(doc[key], list) and all(isinstance(i, int) for i in doc[key]),
            f"{key} must be a list of integers",
        )
    _expect(isinstance(doc["ratio"], (int, float)), "ratio must be a number")
    return PruningPlan(doc["granularity"], float(doc["ratio"]), doc["order"], doc["kept"], doc["dropped"])


def write_report(report: TrajectoryReport, path) -> None:
    _dump_json(
        {
            "ratios": [float(r) for r in report.ratios],
            "accuracy": [float(a) for a in report.accuracy],
            "baseline_accuracy": float(report.baseline_accuracy),
            "winning": [float(r) for r in report.winning],
            "best_winning": None if report.best_winning is None else float(report.best_winning),
            "meta": report.meta,
        },
        path,
    )


def read_report(path) -> TrajectoryReport:
    doc = _load_json(path)
    _expect(isinstance(doc, dict), "report must be a JSON object")
    _expect(
        set(doc) == {"ratios", "accuracy", "baseline_accuracy", "winning", "best_winning", "meta"},
        f"unexpected report keys {sorted(doc)}",
    )
    for key in ("ratios", "accuracy", "winning"):
        _expect(
            isinstance(doc[key], list) and all(isinstance(v, (int, float)) for v in doc[key]),
            f"{key} must be a list of numbers",
        )
    _expect(isinstance(doc["meta"], dict), "meta must be an object")
    best = doc["best_winning"]
    _expect(best is None or isinstance(best, (int, float)), "best_winning must be null or a number")
    return TrajectoryReport(
        [float(r) for r in doc["ratios"]],
        [float(a) for a in doc["accuracy"]],
        float(doc["baseline_accuracy"]),
        [float(r) for r in doc["winning"]],
        None if best is None else float(best),
        doc["meta"],
    )
