"""The three fusion levels: feature concatenation, score sum, trainable head.

Feature-level fusion concatenates per-sample descriptors (e.g. face LBP +
torso LBP -> 17700 dims).  Score-level fusion is the plain sum of aligned
score sets, with no normalization (cosine scores on non-negative features
already share the [0, 1] range).  The CNN-level scheme is emulated by a
trainable late-fusion head over fixed branch embeddings: concat -> fully
connected layer (ReLU) -> bias-free softmax, trained stage-wise (branches
frozen, head learned by seeded mini-batch SGD).
"""

from dataclasses import dataclass, field

import numpy as np

from .classify import SoftmaxModel, TrainConfig, _stable_softmax
from .matching import ScoreSet
from .records import FeatureKind, FeatureVector


@dataclass(frozen=True)
class FusionSpec:
    """Declarative fusion request: level + named inputs."""

    level: str  # "feature" | "score" | "latehead"
    inputs: tuple
    head_config: TrainConfig | None = None

    def __post_init__(self):
        if self.level not in ("feature", "score", "latehead"):
            raise ValueError(f"unknown fusion level {self.level!r}")
        if len(self.inputs) < 2:
            raise ValueError("fusion needs at least two inputs")
        if self.level == "latehead" and len(self.inputs) != 2:
            raise ValueError("the late-fusion head takes exactly two branches")


def fuse_features(vectors) -> FeatureVector:
    """Concatenate per-sample feature vectors in the given order.

    All inputs must describe the same sample identity: when provenance is
    attached, (subject_id, sample_id) must agree across inputs, mirroring
    the identity guarantee of the slice layer in the two-branch network.
    """
    vectors = list(vectors)
    if len(vectors) < 2:
        raise ValueError("feature fusion needs at least two inputs")
    identities = {
        (v.source.subject_id, v.source.sample_id)
        for v in vectors
        if isinstance(v, FeatureVector) and v.source is not None
    }
    if len(identities) > 1:
        raise ValueError(f"inputs mix sample identities: {sorted(identities)}")
    values = np.concatenate(
        [np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors]
    )
    source = next(
        (v.source for v in vectors if isinstance(v, FeatureVector) and v.source is not None),
        None,
    )
    return FeatureVector(FeatureKind.FUSED, values, part=None, source=source)


def fuse_scores(score_sets) -> ScoreSet:
    """Element-wise sum of aligned score sets (no rescaling).

    Matrix-form sets must agree on probes, subjects, and true labels;
    array-form sets must agree on genuine/impostor counts and are summed
    in construction order.
    """
    score_sets = list(score_sets)
    if len(score_sets) < 2:
        raise ValueError("score fusion needs at least two inputs")
    if all(s.matrix is not None for s in score_sets):
        first = score_sets[0]
        for other in score_sets[1:]:
            if other.matrix.shape != first.matrix.shape:
                raise ValueError("score matrices have different shapes")
            if not np.array_equal(other.true_index, first.true_index):
                raise ValueError("score sets disagree on true labels")
            for attr in ("probe_ids", "subject_ids"):
                a, b = getattr(first, attr), getattr(other, attr)
                if a is not None and b is not None and a != b:
                    raise ValueError(f"score sets disagree on {attr}")
        total = np.sum([s.matrix for s in score_sets], axis=0)
        return ScoreSet.from_matrix(
            total, first.true_index, first.probe_ids, first.subject_ids
        )
    sizes = {(s.genuine.size, s.impostor.size) for s in score_sets}
    if len(sizes) != 1:
        raise ValueError(f"score sets have mismatched counts: {sorted(sizes)}")
    return ScoreSet.from_arrays(
        np.sum([s.genuine for s in score_sets], axis=0),
        np.sum([s.impostor for s in score_sets], axis=0),
    )


@dataclass
class LateFusionModel:
    """Concat -> FC(ReLU, with bias) -> bias-free softmax over classes."""

    hidden_weights: np.ndarray  # (hidden, dim_a + dim_b)
    hidden_bias: np.ndarray  # (hidden,)
    softmax: SoftmaxModel  # (classes, hidden)
    branch_dims: tuple
    loss_history: list = field(default_factory=list, repr=False)

    def _concat(self, branch_a, branch_b) -> np.ndarray:
        a = np.atleast_2d(np.asarray(branch_a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(branch_b, dtype=np.float64))
        if a.shape[0] != b.shape[0]:
            raise ValueError("branches must be sample-aligned")
        if (a.shape[1], b.shape[1]) != self.branch_dims:
            raise ValueError(
                f"branch dims {(a.shape[1], b.shape[1])} do not match "
                f"model dims {self.branch_dims}"
            )
        return np.hstack([a, b])

    def hidden_activations(self, branch_a, branch_b) -> np.ndarray:
        concat = self._concat(branch_a, branch_b)
        return np.maximum(concat @ self.hidden_weights.T + self.hidden_bias, 0.0)

    def predict_proba(self, branch_a, branch_b) -> np.ndarray:
        hidden = self.hidden_activations(branch_a, branch_b)
        return _stable_softmax(hidden @ self.softmax.weights.T)

    def predict(self, branch_a, branch_b) -> np.ndarray:
        return np.argmax(self.predict_proba(branch_a, branch_b), axis=1)


def _branch_matrix(features) -> np.ndarray:
    rows = [np.asarray(getattr(f, "values", f), dtype=np.float64) for f in features]
    if not rows:
        raise ValueError("empty branch")
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise ValueError(f"heterogeneous dims within a branch: {sorted(dims)}")
    return np.vstack(rows)


def train_late_fusion(
    branch_a,
    branch_b,
    labels,
    cfg: TrainConfig = TrainConfig(),
    hidden_width=None,
    class_labels=None,
) -> LateFusionModel:
    """Train the late-fusion head on two sample-aligned branches.

    ``hidden_width`` defaults to the first branch's dimensionality
    (mirroring the fc7 -> fc8 sizing).  Deterministic under cfg.seed.
    """
    a = _branch_matrix(branch_a)
    b = _branch_matrix(branch_b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"branches are misaligned: {a.shape[0]} vs {b.shape[0]} samples")
    sources_a = [getattr(f, "source", None) for f in branch_a]
    sources_b = [getattr(f, "source", None) for f in branch_b]
    for sa, sb in zip(sources_a, sources_b):
        if sa is not None and sb is not None:
            if (sa.subject_id, sa.sample_id) != (sb.subject_id, sb.sample_id):
                raise ValueError(
                    f"branch samples misaligned: {sa.subject_id}/{sa.sample_id} vs "
                    f"{sb.subject_id}/{sb.sample_id}"
                )
    y = np.asarray(list(labels), dtype=np.int64)
    if y.shape != (a.shape[0],):
        raise ValueError("one label per sample required")
    num_classes = int(y.max()) + 1
    counts = np.bincount(y, minlength=num_classes)
    if y.min() < 0 or np.any(counts == 0):
        raise ValueError("class indices must cover 0..N-1 with no empty class")
    if class_labels is None:
        class_labels = [str(i) for i in range(num_classes)]

    concat = np.hstack([a, b])
    n, dim = concat.shape
    hidden = int(hidden_width) if hidden_width is not None else a.shape[1]
    if hidden < 1:
        raise ValueError("hidden width must be at least 1")

    # Fan-in-scaled uniform init: a fixed tiny range starves the two-layer
    # gradient chain on wide inputs (fc7-sized branches).
    rng = np.random.default_rng(cfg.seed)
    scale_hidden = np.sqrt(6.0 / dim)
    scale_out = np.sqrt(6.0 / hidden)
    w_hidden = rng.uniform(-scale_hidden, scale_hidden, size=(hidden, dim))
    b_hidden = np.zeros(hidden)
    w_out = rng.uniform(-scale_out, scale_out, size=(num_classes, hidden))

    def full_loss():
        acts = np.maximum(concat @ w_hidden.T + b_hidden, 0.0)
        logits = acts @ w_out.T
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        return float(-(shifted[np.arange(n), y] - log_norm).mean())

    history = [full_loss()]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb, yb = concat[batch], y[batch]
            pre = xb @ w_hidden.T + b_hidden
            acts = np.maximum(pre, 0.0)
            probs = _stable_softmax(acts @ w_out.T)
            probs[np.arange(len(yb)), yb] -= 1.0
            d_logits = probs / len(yb)
            grad_out = d_logits.T @ acts
            d_acts = (d_logits @ w_out) * (pre > 0.0)
            grad_hidden = d_acts.T @ xb
            grad_bias = d_acts.sum(axis=0)
            w_out -= cfg.learning_rate * grad_out
            w_hidden -= cfg.learning_rate * grad_hidden
            b_hidden -= cfg.learning_rate * grad_bias
        history.append(full_loss())

    head = SoftmaxModel(weights=w_out, class_labels=class_labels)
    return LateFusionModel(
        hidden_weights=w_hidden,
        hidden_bias=b_hidden,
        softmax=head,
        branch_dims=(a.shape[1], b.shape[1]),
        loss_history=history,
    )
