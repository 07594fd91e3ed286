"""Relevance scorers: label mapping, feature mapping, and the baselines.

Label mapping (lm) counts, per source class, how many target samples the
source classifier predicts as that class. Feature mapping (fm) is the
label-free analogue: pseudo source classes come from K-means over
representations and each target sample votes for its nearest centroid.
Both are conservative: the scores of a target set of size n sum to n.

Baselines: per-sample loss-gradient norm (grand), error L2 norm (el2n),
distance-to-class-median deviation (moderate), and a seeded random ranking.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend, nn
from .data_io import FeatureSet, ScoreVector
from .errors import DataError, SchemaError
from .rand import stream

# Whether a high score means "keep first" under the ordered direction.
# Moderate keeps the samples closest to the class-median distance, i.e. the
# lowest deviations, so its direction is inverted by the sweep harness.
KEEP_HIGH = {
    "lm": True,
    "fm": True,
    "grand": True,
    "el2n": True,
    "moderate": False,
    "random": True,
}

METHODS = tuple(KEEP_HIGH)


@dataclass
class ClusterModel:
    """K centroids in representation space with fit metadata."""

    k: int
    centroids: np.ndarray
    inertia: float
    n_iters: int
    inertia_trace: list = field(default_factory=list)

    def __post_init__(self):
        self.centroids = np.ascontiguousarray(self.centroids, dtype=np.float64)
        if self.k < 1 or self.centroids.shape[0] != self.k:
            raise SchemaError(f"expected {self.k} centroids, got {self.centroids.shape}")
        if not np.isfinite(self.centroids).all():
            raise SchemaError("centroids must be finite")
        if self.inertia < 0:
            raise SchemaError("inertia must be >= 0")

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


class NearestClassMean:
    """Nearest-class-mean classifier; logits are negated squared distances.

    Distances go through the same kernel as the feature-mapping scorer, so
    argmax over these logits agrees bit-for-bit with a nearest-centroid
    assignment to the same means.
    """

    def __init__(self, means: np.ndarray):
        self.means = np.ascontiguousarray(means, dtype=np.float64)
        self.out_dim = self.means.shape[0]
        self.in_dim = self.means.shape[1]

    @classmethod
    def fit(cls, features: FeatureSet, n_classes=None) -> "NearestClassMean":
        if features.labels is None:
            raise DataError("labels required to fit class means")
        if n_classes is None:
            n_classes = int(features.labels.max()) + 1 if features.n_samples else 0
        if n_classes < 1:
            raise DataError("need at least one class")
        sums, counts = backend.cluster_sums(
            features.features, features.labels.astype(np.int64), n_classes
        )
        if (counts == 0).any():
            empty = int(np.flatnonzero(counts == 0)[0])
            raise DataError(f"class {empty} has no samples")
        return cls(sums / counts[:, None])

    def logits(self, inputs) -> np.ndarray:
        x = inputs.features if isinstance(inputs, FeatureSet) else np.asarray(inputs)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DataError(f"input dim {x.shape} does not match means dim {self.in_dim}")
        return -backend.sqdist(x, self.means)


def _model_logits(model, inputs) -> np.ndarray:
    if isinstance(model, nn.MlpModel):
        return nn.forward(model, inputs)
    if hasattr(model, "logits"):
        return model.logits(inputs)
    raise DataError(f"cannot compute logits with {type(model).__name__}")


def lm_scores(model, targets: FeatureSet, n_classes: int) -> ScoreVector:
    """Per-source-class counts of target samples predicted as that class."""
    if targets.n_samples == 0:
        raise DataError("empty target set")
    logits = _model_logits(model, targets)
    if logits.shape[1] != n_classes:
        raise DataError(f"model predicts {logits.shape[1]} classes, expected {n_classes}")
    preds = np.argmax(logits, axis=1)
    counts = np.bincount(preds, minlength=n_classes).astype(np.float64)
    return ScoreVector("lm", "class", counts)


def kmeans_fit(features, k: int, seed: int, max_iters: int = 100, tol: float = 1e-6) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when the largest centroid movement drops below ``tol`` or after
    ``max_iters`` update rounds. An empty cluster is reseeded to the
    not-yet-claimed point farthest from its assigned centroid. The recorded
    inertia trace is non-increasing.
    """
    x = features.features if isinstance(features, FeatureSet) else np.asarray(features)
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise DataError("cannot cluster an empty feature set")
    if not 1 <= k <= n:
        raise DataError(f"k must lie in [1, {n}], got {k}")
    if max_iters < 1:
        raise DataError("max_iters must be >= 1")

    rng = stream(seed, "kmeans")
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[rng.integers(n)]
    if k > 1:
        d2 = backend.sqdist(x, centroids[:1])[:, 0]
        for j in range(1, k):
            total = float(backend.seqsum(d2))
            if total > 0.0:
                idx = rng.choice(n, p=d2 / total)
            else:
                idx = rng.integers(n)
            centroids[j] = x[idx]
            d2 = np.minimum(d2, backend.sqdist(x, centroids[j : j + 1])[:, 0])

    trace = []
    n_iters = 0
    for _ in range(max_iters):
        dist = backend.sqdist(x, centroids)
        assign = np.argmin(dist, axis=1)
        own = dist[np.arange(n), assign]
        trace.append(float(backend.seqsum(own)))

        counts = np.bincount(assign, minlength=k)
        if (counts == 0).any():
            claimable = own.copy()
            for j in np.flatnonzero(counts == 0):
                far = int(np.argmax(claimable))
                assign[far] = j
                claimable[far] = -1.0

        sums, counts = backend.cluster_sums(x, assign.astype(np.int64), k)
        new_centroids = sums / counts[:, None]
        n_iters += 1
        movement = float(np.diag(backend.sqdist(new_centroids, centroids)).max())
        centroids = new_centroids
        if movement < tol * tol:
            break

    dist = backend.sqdist(x, centroids)
    assign = np.argmin(dist, axis=1)
    inertia = float(backend.seqsum(dist[np.arange(n), assign]))
    trace.append(inertia)
    return ClusterModel(k, centroids, inertia, n_iters, trace)


def kmeans_assign(cluster: ClusterModel, features) -> np.ndarray:
    """Nearest-centroid index per row (ties -> lowest index)."""
    x = features.features if isinstance(features, FeatureSet) else np.asarray(features)
    if x.ndim != 2 or x.shape[1] != cluster.dim:
        raise DataError(f"input dim {x.shape} does not match centroid dim {cluster.dim}")
    return np.argmin(backend.sqdist(x, cluster.centroids), axis=1)


def fm_responsiveness(cluster: ClusterModel, t) -> int:
    """Index of the centroid nearest to a single feature vector."""
    t = np.asarray(t, dtype=np.float64).reshape(1, -1)
    return int(kmeans_assign(cluster, t)[0])


def fm_scores(cluster: ClusterModel, targets: FeatureSet) -> ScoreVector:
    """Per-pseudo-class counts of target samples nearest to that centroid."""
    if targets.n_samples == 0:
        raise DataError("empty target set")
    assign = kmeans_assign(cluster, targets)
    counts = np.bincount(assign, minlength=cluster.k).astype(np.float64)
    return ScoreVector("fm", "class", counts)


def grand_scores(model: nn.MlpModel, source: FeatureSet) -> ScoreVector:
    """Per-sample L2 norm of the loss gradient over all model parameters.

    Uses the rank-1 structure of per-sample dense-layer gradients:
    ||a dz^T||_F^2 = ||a||^2 ||dz||^2, so no per-sample parameter-sized
    buffers are materialised.
    """
    if source.n_samples == 0:
        raise DataError("empty source set")
    if source.labels is None:
        raise DataError("labels required for gradient scores")
    x = source.features
    if x.shape[1] != model.in_dim:
        raise DataError(f"input dim {x.shape[1]} does not match model input dim {model.in_dim}")
    if int(source.labels.max()) >= model.out_dim:
        raise DataError("label out of range for model head")
    y = source.labels.astype(np.int64)

    logits, layer_inputs, preacts = nn._forward_cached(model, x)
    n = x.shape[0]
    dz = nn.softmax(logits)
    dz[np.arange(n), y] -= np.float32(1.0)

    total = np.zeros(n, dtype=np.float64)
    for li in range(model.n_layers - 1, -1, -1):
        dz_sq = np.sum(dz.astype(np.float64) ** 2, axis=1)
        a_sq = np.sum(layer_inputs[li].astype(np.float64) ** 2, axis=1)
        total += dz_sq * (a_sq + 1.0)
        if li > 0:
            da = backend.matmul_nt(dz, model.weights[li])
            dz = da * (preacts[li - 1] > 0)
    return ScoreVector("grand", "sample", np.sqrt(total))


def el2n_scores(model: nn.MlpModel, source: FeatureSet) -> ScoreVector:
    """Per-sample L2 norm of (softmax probabilities - one-hot label)."""
    if source.n_samples == 0:
        raise DataError("empty source set")
    if source.labels is None:
        raise DataError("labels required for el2n scores")
    if int(source.labels.max()) >= model.out_dim:
        raise DataError("label out of range for model head")
    probs = nn.softmax(nn.forward(model, source)).astype(np.float64)
    probs[np.arange(source.n_samples), source.labels.astype(np.int64)] -= 1.0
    return ScoreVector("el2n", "sample", np.sqrt(backend.seqsum_rows(probs * probs)))


def moderate_scores(features: FeatureSet, n_classes=None) -> ScoreVector:
    """Per-sample |distance to own class centroid - class median distance|."""
    if features.n_samples == 0:
        raise DataError("empty feature set")
    if features.labels is None:
        raise DataError("labels required for moderate scores")
    if n_classes is None:
        n_classes = int(features.labels.max()) + 1
    y = features.labels.astype(np.int64)
    sums, counts = backend.cluster_sums(features.features, y, n_classes)
    if (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        raise DataError(f"class {empty} has no samples")
    means = sums / counts[:, None]
    own = np.sqrt(backend.sqdist(features.features, means)[np.arange(features.n_samples), y])
    medians = np.array([np.median(own[y == c]) for c in range(n_classes)])
    return ScoreVector("moderate", "sample", np.abs(own - medians[y]))


def random_scores(n: int, seed: int, granularity: str = "sample") -> ScoreVector:
    """Seeded uniform ranking: scores are a permutation of 0..n-1."""
    if n < 1:
        raise DataError("population must be >= 1")
    perm = stream(seed, "score").permutation(n).astype(np.float64)
    return ScoreVector("random", granularity, perm, seed=seed)
