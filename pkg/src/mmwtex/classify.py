"""Multiclass softmax classifier trained by mini-batch gradient descent.

The model is the bias-free linear softmax P(y=j|x) = exp(x.w_j) / sum_k
exp(x.w_k), always evaluated in the max-subtracted stable form.  Training
minimizes mean cross-entropy with plain mini-batch SGD (no momentum, no
weight decay); shuffling and weight init are drawn from one seeded
generator, so a given (data, config) pair reproduces bit-identical weights.
"""

from dataclasses import dataclass, field

import numpy as np

from .records import FeatureVector

MODEL_MAGIC = "MMWSOFTMAX"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 50
    learning_rate: float = 1e-4
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.learning_rate <= 0:
            raise ValueError("batch_size, epochs and learning_rate must be positive")


@dataclass
class SoftmaxModel:
    weights: np.ndarray  # (num_classes, dim)
    class_labels: tuple
    loss_history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("weights must be a (classes, dim) matrix")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        self.class_labels = tuple(str(lab) for lab in self.class_labels)
        if len(self.class_labels) != self.weights.shape[0]:
            raise ValueError("one label per class required")

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _as_values(x, dim):
    values = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if values.ndim != 1 or values.size != dim:
        raise ValueError(f"feature dim {values.size} does not match model dim {dim}")
    return values


def softmax_probs(model: SoftmaxModel, x) -> np.ndarray:
    """Class probabilities for one feature vector (stable softmax)."""
    values = _as_values(x, model.dim)
    logits = model.weights @ values
    return _stable_softmax(logits[None, :])[0]


def _stable_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def predict_class(model: SoftmaxModel, x):
    """(argmax class index, probability vector); ties go to the lowest index."""
    probs = softmax_probs(model, x)
    return int(np.argmax(probs)), probs


def mean_cross_entropy(weights, x_matrix, y) -> float:
    """Mean cross-entropy of labels ``y`` under the linear softmax."""
    logits = x_matrix @ weights.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted[np.arange(len(y)), y] - log_norm
    return float(-log_probs.mean())


def softmax_gradient(weights, x_matrix, y) -> np.ndarray:
    """Gradient of mean cross-entropy w.r.t. weights: (p - onehot)^T X / B."""
    probs = _stable_softmax(x_matrix @ weights.T)
    probs[np.arange(len(y)), y] -= 1.0
    return probs.T @ x_matrix / len(y)


def _stack_training_data(data):
    pairs = list(data)
    if not pairs:
        raise ValueError("no training samples")
    xs, ys = [], []
    for x, label in pairs:
        values = np.asarray(x.values if isinstance(x, FeatureVector) else x, np.float64)
        xs.append(values)
        ys.append(int(label))
    dims = {v.size for v in xs}
    if len(dims) != 1:
        raise ValueError(f"heterogeneous feature dims: {sorted(dims)}")
    x_matrix = np.vstack(xs)
    y = np.asarray(ys, dtype=np.int64)
    if y.min() < 0:
        raise ValueError("class indices must be non-negative")
    num_classes = int(y.max()) + 1
    counts = np.bincount(y, minlength=num_classes)
    if np.any(counts == 0):
        missing = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"class {missing} has no training samples")
    return x_matrix, y, num_classes


def train_softmax(data, cfg: TrainConfig = TrainConfig(), class_labels=None) -> SoftmaxModel:
    """Train on (feature, class index) pairs; deterministic under cfg.seed.

    Every epoch shuffles the sample order with the seeded generator and
    walks it in batch_size chunks (final partial batch included).  The
    returned model carries the mean full-set cross-entropy before training
    and after each epoch in ``loss_history``.
    """
    x_matrix, y, num_classes = _stack_training_data(data)
    if class_labels is None:
        class_labels = [str(i) for i in range(num_classes)]
    elif len(class_labels) != num_classes:
        raise ValueError("one label per class required")

    rng = np.random.default_rng(cfg.seed)
    weights = rng.uniform(-0.01, 0.01, size=(num_classes, x_matrix.shape[1]))
    history = [mean_cross_entropy(weights, x_matrix, y)]
    n = len(y)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grad = softmax_gradient(weights, x_matrix[batch], y[batch])
            weights -= cfg.learning_rate * grad
        history.append(mean_cross_entropy(weights, x_matrix, y))
    return SoftmaxModel(weights=weights, class_labels=class_labels, loss_history=history)


def model_to_text(model: SoftmaxModel) -> str:
    """Serialize: header, one weight row per line, one label line."""
    for label in model.class_labels:
        if not label or any(ch.isspace() for ch in label):
            raise ValueError(f"label {label!r} is empty or contains whitespace")
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION} {model.num_classes} {model.dim}"]
    for row in model.weights:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append(" ".join(model.class_labels))
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> SoftmaxModel:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty model file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != MODEL_MAGIC or header[1] != str(MODEL_VERSION):
        raise ValueError(f"bad model header {lines[0]!r}")
    num_classes, dim = int(header[2]), int(header[3])
    if len(lines) != 2 + num_classes:
        raise ValueError(
            f"expected {num_classes} weight rows + label line, got {len(lines) - 1} lines"
        )
    weights = np.empty((num_classes, dim), dtype=np.float64)
    for i, line in enumerate(lines[1 : 1 + num_classes]):
        row = line.split()
        if len(row) != dim:
            raise ValueError(f"weight row {i} has {len(row)} values, expected {dim}")
        weights[i] = [float(v) for v in row]
    labels = lines[1 + num_classes].split()
    if len(labels) != num_classes:
        raise ValueError(f"expected {num_classes} labels, got {len(labels)}")
    return SoftmaxModel(weights=weights, class_labels=labels)


def save_model(path, model: SoftmaxModel):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> SoftmaxModel:
    with open(path, "r", encoding="ascii") as fh:
        return model_from_text(fh.read())
