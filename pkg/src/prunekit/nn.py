"""Minimal deterministic MLP classifier core.

Dense layers with rectifier hidden activations and an identity output layer,
softmax cross-entropy, and mini-batch SGD with momentum. All float32, all
reductions in a fixed ascending order through the kernel backend, so a given
(model, data, config) triple always produces bit-identical results.

The input to the final layer is the representation space used by the
feature-mapping scorer and the linear probe.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .data_io import FeatureSet
from .errors import (
    BadMagicError,
    DataError,
    NonFiniteError,
    SchemaError,
    TrainingDivergedError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .rand import stream

_CKPT_MAGIC = b"DPTM"
_CKPT_HEADER = struct.Struct("<4sHHI")


@dataclass
class MlpModel:
    layer_dims: list
    weights: list
    biases: list
    seed_lineage: list = field(default_factory=list)

    def __post_init__(self):
        dims = self.layer_dims
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise SchemaError(f"layer_dims must be >= 2 positive entries, got {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise SchemaError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise SchemaError(f"layer {i} has shape {w.shape}/{b.shape}, expected ({dims[i]},{dims[i+1]})")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NonFiniteError(f"layer {i} contains non-finite parameters")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.seed_lineage),
        )

    def params_equal(self, other: "MlpModel") -> bool:
        return self.layer_dims == other.layer_dims and all(
            np.array_equal(a, b)
            for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise SchemaError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate < 0 or not (0.0 <= self.momentum < 1.0) or self.weight_decay < 0:
            raise SchemaError("learning_rate/weight_decay must be >= 0 and momentum in [0,1)")


def init_model(layer_dims, seed: int) -> MlpModel:
    """Uniform init scaled by 1/sqrt(fan_in), zero biases, seeded."""
    if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
        raise SchemaError(f"layer_dims must be >= 2 positive entries, got {layer_dims}")
    rng = stream(seed, "model-init")
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)).astype(np.float32))
        biases.append(np.zeros(d_out, dtype=np.float32))
    return MlpModel(list(layer_dims), weights, biases, [seed])


def _features_of(inputs) -> np.ndarray:
    if isinstance(inputs, FeatureSet):
        return inputs.features
    return np.ascontiguousarray(inputs, dtype=np.float32)


def _check_in_dim(model: MlpModel, x: np.ndarray):
    if x.shape[1] != model.in_dim:
        raise DataError(f"input dim {x.shape[1]} does not match model input dim {model.in_dim}")


def _forward_cached(model: MlpModel, x: np.ndarray):
    """Returns (logits, layer_inputs, hidden_preacts)."""
    layer_inputs = [x]
    preacts = []
    a = x
    last = model.n_layers - 1
    for li in range(model.n_layers):
        z = backend.matmul_nn(a, model.weights[li]) + model.biases[li]
        if li == last:
            return z, layer_inputs, preacts
        preacts.append(z)
        a = np.maximum(z, np.float32(0.0))
        layer_inputs.append(a)
    raise AssertionError("unreachable")


def forward(model: MlpModel, inputs) -> np.ndarray:
    """Logits (n_samples x n_classes) for a batch."""
    x = _features_of(inputs)
    _check_in_dim(model, x)
    logits, _, _ = _forward_cached(model, x)
    return logits


def extract_features(model: MlpModel, inputs) -> FeatureSet:
    """Penultimate activations; a model without hidden layers is the identity."""
    x = _features_of(inputs)
    _check_in_dim(model, x)
    labels = inputs.labels if isinstance(inputs, FeatureSet) else None
    if model.n_layers == 1:
        return inputs if isinstance(inputs, FeatureSet) else FeatureSet(x, labels)
    a = x
    for li in range(model.n_layers - 1):
        z = backend.matmul_nn(a, model.weights[li]) + model.biases[li]
        a = np.maximum(z, np.float32(0.0))
    return FeatureSet(a, labels)


def head_logits(model: MlpModel, representation) -> np.ndarray:
    """Final layer applied to a representation batch (forward == head of extract)."""
    r = _features_of(representation)
    return backend.matmul_nn(r, model.weights[-1]) + model.biases[-1]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row softmax in float32 with fixed-order denominators."""
    z = np.ascontiguousarray(logits, dtype=np.float32)
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    s = backend.seqsum_rows(e)
    return e / s[:, None]


def _check_labels(labels, n_classes: int):
    if labels is None:
        raise DataError("labels required")
    if labels.size and int(labels.max()) >= n_classes:
        raise DataError(f"label {int(labels.max())} out of range for {n_classes} classes")


def loss_and_grad(model: MlpModel, batch: FeatureSet, weight_decay: float = 0.0):
    """Mean softmax cross-entropy and its gradient in the model's shape.

    Returns (loss, grad_weights, grad_biases). The weight-decay term (if
    non-zero) is added to the gradient only, mirroring common SGD usage;
    the returned loss is the plain cross-entropy.
    """
    x = _features_of(batch)
    _check_in_dim(model, x)
    if x.shape[0] == 0:
        raise DataError("empty batch")
    _check_labels(batch.labels, model.out_dim)
    y = batch.labels.astype(np.int64)

    logits, layer_inputs, preacts = _forward_cached(model, x)
    n = x.shape[0]
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    e = np.exp(shifted)
    s = backend.seqsum_rows(e)
    probs = e / s[:, None]
    per_sample = np.log(s) - shifted[np.arange(n), y]
    loss = float(backend.seqsum(per_sample) / np.float32(n))

    dz = probs.copy()
    dz[np.arange(n), y] -= np.float32(1.0)
    dz *= np.float32(1.0 / n)

    wd = np.float32(weight_decay)
    grad_w = [None] * model.n_layers
    grad_b = [None] * model.n_layers
    for li in range(model.n_layers - 1, -1, -1):
        gw = backend.matmul_tn(layer_inputs[li], dz)
        gb = backend.colsum(dz)
        if weight_decay:
            gw = gw + wd * model.weights[li]
            gb = gb + wd * model.biases[li]
        grad_w[li] = gw
        grad_b[li] = gb
        if li > 0:
            da = backend.matmul_nt(dz, model.weights[li])
            dz = da * (preacts[li - 1] > 0)
    return loss, grad_w, grad_b


def train(model: MlpModel, data: FeatureSet, config: TrainConfig):
    """SGD with momentum; returns (trained model, per-epoch mean loss trace).

    Shuffle order, and therefore the whole run, is a pure function of
    (model, data, config). The input model is not mutated. The last partial
    batch is kept.
    """
    x = _features_of(data)
    _check_in_dim(model, x)
    n = x.shape[0]
    if n == 0:
        raise DataError("cannot train on an empty dataset")
    _check_labels(data.labels, model.out_dim)

    out = model.copy()
    vel_w = [np.zeros_like(w) for w in out.weights]
    vel_b = [np.zeros_like(b) for b in out.biases]
    lr = np.float32(config.learning_rate)
    mu = np.float32(config.momentum)
    rng = stream(config.seed, "shuffle")
    trace = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            batch = FeatureSet(x[idx], data.labels[idx])
            loss, gw, gb = loss_and_grad(out, batch, config.weight_decay)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch}, batch offset {start}"
                )
            for li in range(out.n_layers):
                vel_w[li] = mu * vel_w[li] + gw[li]
                vel_b[li] = mu * vel_b[li] + gb[li]
                out.weights[li] = out.weights[li] - lr * vel_w[li]
                out.biases[li] = out.biases[li] - lr * vel_b[li]
            loss_sum += loss * len(idx)
        trace.append(loss_sum / n)
    out.seed_lineage.append(config.seed)
    return out, trace


def accuracy(model: MlpModel, data: FeatureSet) -> float:
    """Fraction of samples whose argmax logit (ties -> lowest index) matches."""
    if data.n_samples == 0:
        raise DataError("cannot score an empty dataset")
    _check_labels(data.labels, model.out_dim)
    preds = np.argmax(forward(model, data), axis=1)
    return float(np.count_nonzero(preds == data.labels.astype(np.int64))) / data.n_samples


# ---------------------------------------------------------------------------
# checkpoint format: JSON header + raw little-endian float32 parameter block


def save_model(model: MlpModel, path) -> None:
    header = json.dumps(
        {"layer_dims": list(model.layer_dims), "seed_lineage": list(model.seed_lineage)}
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_HEADER.pack(_CKPT_MAGIC, 1, 0, len(header)))
        fh.write(header)
        for w, b in zip(model.weights, model.biases):
            fh.write(w.astype("<f4", copy=False).tobytes())
            fh.write(b.astype("<f4", copy=False).tobytes())


def load_model(path) -> MlpModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _CKPT_HEADER.size:
        raise TruncatedFileError(f"checkpoint too short: {len(blob)} bytes")
    magic, version, _, header_len = _CKPT_HEADER.unpack_from(blob)
    if magic != _CKPT_MAGIC:
        raise BadMagicError(f"bad checkpoint magic {magic!r}")
    if version != 1:
        raise UnsupportedVersionError(f"unsupported checkpoint version {version}")
    off = _CKPT_HEADER.size
    try:
        header = json.loads(blob[off : off + header_len].decode("utf-8"))
        dims = header["layer_dims"]
        lineage = header["seed_lineage"]
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"invalid checkpoint header: {exc}") from exc
    off += header_len
    n_params = sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))
    expected = off + 4 * n_params
    if len(blob) != expected:
        raise TruncatedFileError(f"checkpoint payload: expected {expected} bytes, got {len(blob)}")
    weights, biases = [], []
    for i in range(len(dims) - 1):
        w_count = dims[i] * dims[i + 1]
        w = np.frombuffer(blob, dtype="<f4", count=w_count, offset=off).reshape(dims[i], dims[i + 1])
        off += 4 * w_count
        b = np.frombuffer(blob, dtype="<f4", count=dims[i + 1], offset=off)
        off += 4 * dims[i + 1]
        weights.append(w.copy())
        biases.append(b.copy())
    return MlpModel(dims, weights, biases, lineage)
