"""Classifier heads trained on frozen feature embeddings.

Three heads, matching the usual low-shot probing choices:

* multinomial logistic regression, trained by mini-batch gradient descent
  on cross-entropy with L2 weight decay,
* mean-centroid: one prototype per class, nearest prototype in L2 distance,
* a cosine head whose logits are a fixed scale times the cosine similarity
  between per-class direction vectors and the L2-normalized embedding.

Training is plain numpy, single-threaded, and bit-reproducible for a given
(data, config, seed) triple.  Inputs can be the wrapper types below or raw
arrays / label sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

__all__ = [
    "EmbeddingMatrix",
    "LabelVector",
    "TrainConfig",
    "ClassifierModel",
    "LOGISTIC",
    "CENTROID",
    "BASELINEPP",
    "train_logistic_regression",
    "train_mean_centroid",
    "train_baselinepp",
    "predict",
    "evaluate_accuracy",
    "logistic_loss_and_grad",
    "model_to_paramset",
    "model_from_paramset",
]

LOGISTIC = "logistic"
CENTROID = "centroid"
BASELINEPP = "baselinepp"

TOP1 = "top1"
PER_CLASS_AVERAGE = "per-class-average"


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense (rows, dims) matrix of frozen feature embeddings, float64."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"embeddings must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"embeddings must be non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embeddings contain non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def dims(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class LabelVector:
    """Integer class labels in [0, num_classes)."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {arr.shape}")
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.num_classes):
            raise ValueError(
                f"labels must lie in [0, {self.num_classes}), "
                f"got range [{arr.min()}, {arr.max()}]"
            )
        object.__setattr__(self, "labels", arr)

    def __len__(self) -> int:
        return int(self.labels.size)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings shared by the gradient-trained heads.

    ``cosine_scale`` only affects the cosine head, where raw cosine logits
    in [-1, 1] would saturate softmax gradients without it.
    """

    epochs: int
    learning_rate: float
    batch_size: int
    weight_decay: float = 0.0
    momentum: float = 0.0
    seed: int = 0
    cosine_scale: float = 10.0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not math.isfinite(self.learning_rate) or self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not math.isfinite(self.weight_decay) or self.weight_decay < 0.0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not math.isfinite(self.cosine_scale) or self.cosine_scale <= 0.0:
            raise ValueError(f"cosine_scale must be > 0, got {self.cosine_scale}")

    @classmethod
    def for_logistic(cls, **overrides) -> "TrainConfig":
        """Defaults for the logistic head: 300 epochs, batch 16, wd 0.0025."""
        base = dict(
            epochs=300, learning_rate=0.01, batch_size=16, weight_decay=0.0025
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def for_baselinepp(cls, **overrides) -> "TrainConfig":
        """Defaults for the cosine head: 100 epochs, lr 0.01, batch 16, wd 0.001."""
        base = dict(
            epochs=100,
            learning_rate=0.01,
            batch_size=16,
            weight_decay=0.001,
            momentum=0.9,
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class ClassifierModel:
    """A trained head plus the preprocessing it expects at prediction time.

    ``weights`` is (num_classes, dims): the linear weights for the logistic
    head, the class prototypes for the centroid head, and the (unnormalized)
    class directions for the cosine head.  ``train_loss`` holds the
    per-epoch training objective for gradient-trained heads.
    """

    kind: str
    weights: np.ndarray
    bias: np.ndarray | None = None
    l2_normalize: bool = False
    layer_norm: bool = False
    cosine_scale: float = 10.0
    train_loss: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in (LOGISTIC, CENTROID, BASELINEPP):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must be (num_classes, dims)")
        if self.bias is not None:
            self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.weights.shape[0],):
                raise ValueError("bias must have one entry per class")

    @property
    def num_classes(self) -> int:
        return int(self.weights.shape[0])

    @property
    def dims(self) -> int:
        return int(self.weights.shape[1])


def as_embedding_matrix(X) -> EmbeddingMatrix:
    return X if isinstance(X, EmbeddingMatrix) else EmbeddingMatrix(np.asarray(X))


def as_label_vector(y, num_classes: int | None = None) -> LabelVector:
    if isinstance(y, LabelVector):
        return y
    arr = np.asarray(y, dtype=np.int64)
    if num_classes is None:
        num_classes = int(arr.max()) + 1 if arr.size else 1
    return LabelVector(arr, num_classes)


def _check_paired(X: EmbeddingMatrix, y: LabelVector) -> None:
    if X.rows != len(y):
        raise ValueError(
            f"embeddings have {X.rows} rows but labels have {len(y)} entries"
        )


def _check_all_classes_present(y: LabelVector) -> None:
    present = np.unique(y.labels)
    if present.size != y.num_classes:
        missing = sorted(set(range(y.num_classes)) - set(present.tolist()))
        raise ValueError(f"classes with no training samples: {missing}")


def _layer_norm_rows(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=1, keepdims=True)
    var = X.var(axis=1, keepdims=True)
    return (X - mean) / np.sqrt(var + 1e-12)


def _l2_normalize_rows(X: np.ndarray, context: str) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        bad = np.flatnonzero(norms[:, 0] == 0.0)
        raise ValueError(f"zero-norm embedding rows in {context}: {bad.tolist()}")
    return X / norms


def _preprocess(X: np.ndarray, layer_norm: bool, l2_normalize: bool) -> np.ndarray:
    # layer norm first, then L2, so the unit-norm property survives
    if layer_norm:
        X = _layer_norm_rows(X)
    if l2_normalize:
        X = _l2_normalize_rows(X, "input")
    return X


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def logistic_loss_and_grad(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    weight_decay: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (wd/2)*||W||^2, with analytic gradients.

    Biases are not regularized.  Exposed so the gradient can be checked
    against finite differences independently of the training loop.
    """
    n = X.shape[0]
    logits = X @ W.T + b
    probs = _softmax(logits)
    nll = -np.log(probs[np.arange(n), y])
    loss = float(nll.mean()) + 0.5 * weight_decay * float(np.sum(W * W))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    grad_W = delta.T @ X / n + weight_decay * W
    grad_b = delta.sum(axis=0) / n
    return loss, grad_W, grad_b


def train_logistic_regression(
    X,
    y,
    cfg: TrainConfig | None = None,
    *,
    l2_normalize: bool = False,
    layer_norm: bool = False,
) -> ClassifierModel:
    """Train the multinomial logistic head by mini-batch gradient descent.

    Weights and biases start at zero, so zero epochs yields uniform logits.
    Every class must appear at least once in the labels.  The per-epoch
    training objective (mean of pre-step batch losses, including the weight
    decay term) is recorded on the returned model.
    """
    cfg = cfg or TrainConfig.for_logistic()
    Xm, yv = as_embedding_matrix(X), as_label_vector(y)
    _check_paired(Xm, yv)
    _check_all_classes_present(yv)
    data = _preprocess(Xm.data, layer_norm, l2_normalize)
    labels = yv.labels
    n, dims, C = Xm.rows, Xm.dims, yv.num_classes

    W = np.zeros((C, dims))
    b = np.zeros(C)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    rng = np.random.default_rng(cfg.seed)
    losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        batch_losses: list[float] = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gW, gb = logistic_loss_and_grad(
                W, b, data[idx], labels[idx], cfg.weight_decay
            )
            batch_losses.append(loss)
            vW = cfg.momentum * vW + gW
            vb = cfg.momentum * vb + gb
            W = W - cfg.learning_rate * vW
            b = b - cfg.learning_rate * vb
        losses.append(float(np.mean(batch_losses)))
    return ClassifierModel(
        kind=LOGISTIC,
        weights=W,
        bias=b,
        l2_normalize=l2_normalize,
        layer_norm=layer_norm,
        train_loss=losses,
    )


def train_mean_centroid(X, y) -> ClassifierModel:
    """One prototype per class: the mean of that class's embeddings."""
    Xm, yv = as_embedding_matrix(X), as_label_vector(y)
    _check_paired(Xm, yv)
    _check_all_classes_present(yv)
    C = yv.num_classes
    centroids = np.empty((C, Xm.dims))
    for c in range(C):
        centroids[c] = Xm.data[yv.labels == c].mean(axis=0)
    return ClassifierModel(kind=CENTROID, weights=centroids)


def _cosine_logits(
    W: np.ndarray, Z_hat: np.ndarray, scale: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled cosine logits for unit-norm inputs, plus row norms of W."""
    w_norms = np.linalg.norm(W, axis=1)
    if np.any(w_norms == 0.0):
        raise ValueError("zero-norm class direction; cosine undefined")
    W_hat = W / w_norms[:, None]
    cos = Z_hat @ W_hat.T
    return scale * cos, W_hat, w_norms


def baselinepp_loss_and_grad(
    W: np.ndarray,
    Z_hat: np.ndarray,
    y: np.ndarray,
    scale: float,
    weight_decay: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Cross-entropy over scaled cosine logits, with the gradient through
    the direction normalization.

    ``Z_hat`` must already be row-normalized.
    """
    n = Z_hat.shape[0]
    logits, W_hat, w_norms = _cosine_logits(W, Z_hat, scale)
    cos = logits / scale
    probs = _softmax(logits)
    nll = -np.log(probs[np.arange(n), y])
    loss = float(nll.mean()) + 0.5 * weight_decay * float(np.sum(W * W))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    # d cos(z, w_c) / d w_c = (z_hat - cos * w_hat_c) / ||w_c||
    agg = delta.T @ Z_hat  # (C, dims)
    diag = (delta * cos).sum(axis=0)  # (C,)
    grad = scale * (agg - diag[:, None] * W_hat) / w_norms[:, None]
    grad += weight_decay * W
    return loss, grad


def train_baselinepp(X, y, cfg: TrainConfig | None = None) -> ClassifierModel:
    """Train the cosine head by mini-batch gradient descent with momentum.

    Inputs are L2-normalized (zero-norm rows are an error); logits are
    ``cosine_scale * cos(w_c, z)``.  Class directions start from a seeded
    Gaussian draw with unit expected norm, so the run is deterministic for
    a given seed.  Every class must appear in the labels.
    """
    cfg = cfg or TrainConfig.for_baselinepp()
    Xm, yv = as_embedding_matrix(X), as_label_vector(y)
    _check_paired(Xm, yv)
    _check_all_classes_present(yv)
    Z_hat = _l2_normalize_rows(Xm.data, "training embeddings")
    labels = yv.labels
    n, dims, C = Xm.rows, Xm.dims, yv.num_classes

    rng = np.random.default_rng(cfg.seed)
    W = rng.normal(0.0, 1.0 / math.sqrt(dims), size=(C, dims))
    vW = np.zeros_like(W)
    losses: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        batch_losses: list[float] = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gW = baselinepp_loss_and_grad(
                W, Z_hat[idx], labels[idx], cfg.cosine_scale, cfg.weight_decay
            )
            batch_losses.append(loss)
            vW = cfg.momentum * vW + gW
            W = W - cfg.learning_rate * vW
        losses.append(float(np.mean(batch_losses)))
    return ClassifierModel(
        kind=BASELINEPP,
        weights=W,
        cosine_scale=cfg.cosine_scale,
        train_loss=losses,
    )


def predict(model: ClassifierModel, X) -> LabelVector:
    """Predicted class per row; ties resolve to the lowest class index."""
    Xm = as_embedding_matrix(X)
    if Xm.dims != model.dims:
        raise ValueError(
            f"embeddings have {Xm.dims} dims but model expects {model.dims}"
        )
    if model.kind == LOGISTIC:
        data = _preprocess(Xm.data, model.layer_norm, model.l2_normalize)
        logits = data @ model.weights.T
        if model.bias is not None:
            logits += model.bias
        pred = np.argmax(logits, axis=1)
    elif model.kind == CENTROID:
        diffs = Xm.data[:, None, :] - model.weights[None, :, :]
        dists = np.sum(diffs * diffs, axis=-1)
        pred = np.argmin(dists, axis=1)
    else:  # BASELINEPP
        Z_hat = _l2_normalize_rows(Xm.data, "query embeddings")
        logits, _, _ = _cosine_logits(model.weights, Z_hat, model.cosine_scale)
        pred = np.argmax(logits, axis=1)
    return LabelVector(pred, model.num_classes)


def evaluate_accuracy(truth, pred, mode: str = TOP1) -> float:
    """Accuracy of predictions against ground truth.

    ``top1`` is the plain fraction correct.  ``per-class-average`` is the
    unweighted mean over classes of the within-class accuracy, which is
    robust to class imbalance; classes with no ground-truth samples are
    excluded from the mean.
    """
    if isinstance(truth, LabelVector) and isinstance(pred, LabelVector):
        if truth.num_classes != pred.num_classes:
            raise ValueError(
                f"class count mismatch: {truth.num_classes} vs {pred.num_classes}"
            )
        t, p = truth, pred
    elif isinstance(truth, LabelVector):
        t, p = truth, as_label_vector(pred, truth.num_classes)
    elif isinstance(pred, LabelVector):
        t, p = as_label_vector(truth, pred.num_classes), pred
    else:
        ta = np.asarray(truth, dtype=np.int64)
        pa = np.asarray(pred, dtype=np.int64)
        C = int(max(ta.max(initial=0), pa.max(initial=0))) + 1
        t, p = LabelVector(ta, C), LabelVector(pa, C)
    C = t.num_classes
    if len(t) != len(p):
        raise ValueError(
            f"length mismatch: {len(t)} truth labels vs {len(p)} predictions"
        )
    if len(t) == 0:
        raise ValueError("cannot evaluate accuracy on zero samples")
    correct = t.labels == p.labels
    if mode == TOP1:
        return float(correct.mean())
    if mode == PER_CLASS_AVERAGE:
        per_class = [
            float(correct[t.labels == c].mean())
            for c in range(C)
            if np.any(t.labels == c)
        ]
        return float(np.mean(per_class))
    raise ValueError(f"unknown accuracy mode {mode!r}")


def model_to_paramset(model: ClassifierModel):
    """Flatten a model's parameters into a ParamSet for weight-space ops."""
    from .ensembles import ParamSet

    entries = {"weights": model.weights.ravel()}
    if model.bias is not None:
        entries["bias"] = model.bias
    return ParamSet(entries)


def model_from_paramset(template: ClassifierModel, paramset) -> ClassifierModel:
    """Rebuild a model from a ParamSet, taking shape and flags from ``template``."""
    entries = paramset.entries
    expected = {"weights"} | ({"bias"} if template.bias is not None else set())
    if set(entries) != expected:
        raise ValueError(
            f"paramset names {sorted(entries)} do not match template "
            f"names {sorted(expected)}"
        )
    weights = entries["weights"]
    if weights.size != template.num_classes * template.dims:
        raise ValueError(
            f"weights have {weights.size} values, template expects "
            f"{template.num_classes * template.dims}"
        )
    return ClassifierModel(
        kind=template.kind,
        weights=weights.reshape(template.num_classes, template.dims).copy(),
        bias=entries["bias"].copy() if template.bias is not None else None,
        l2_normalize=template.l2_normalize,
        layer_norm=template.layer_norm,
        cosine_scale=template.cosine_scale,
    )
