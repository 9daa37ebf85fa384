"""Cosine matching, gallery templates, and protocol-driven score generation.

A protocol picks, per subject, 2 gallery samples (averaged into one
template) and 2 probe samples, filtered by pose: the frontal baseline draws
both sets from frontal scans, the cross-pose protocol enrolls frontal scans
and probes with lateral ones.  Every probe is scored against every subject
template with cosine similarity, so S subjects with 2 probes each yield
2*S genuine and 2*S*(S-1) impostor scores (100 / 4900 at S = 50).

Results are order-canonical: subjects and probes are sorted by id, so the
same dataset produces the same ScoreSet regardless of input order.
"""

import io
from dataclasses import dataclass

import numpy as np

from .records import FeatureKind, FeatureVector, Pose, feature_matrix


@dataclass(frozen=True)
class Protocol:
    """Declarative gallery/probe split definition."""

    name: str
    gallery_pose: Pose
    probe_pose: Pose
    gallery_count: int = 2
    probe_count: int = 2
    split_seed: int = 0
    include_occluded: bool = False

    def __post_init__(self):
        if self.gallery_count < 1 or self.probe_count < 1:
            raise ValueError("gallery and probe counts must be at least 1")


def frontal_protocol(split_seed=0, **kwargs) -> Protocol:
    """Baseline protocol: gallery and probes both from frontal scans."""
    return Protocol("frontal", Pose.FRONTAL, Pose.FRONTAL, split_seed=split_seed, **kwargs)


def cross_pose_protocol(split_seed=0, **kwargs) -> Protocol:
    """Pose-robustness protocol: frontal gallery, lateral probes."""
    return Protocol("crosspose", Pose.FRONTAL, Pose.LATERAL, split_seed=split_seed, **kwargs)


PROTOCOLS = {"frontal": frontal_protocol, "crosspose": cross_pose_protocol}


@dataclass
class ScoreSet:
    """Labeled similarity scores in verification and/or matrix form.

    ``genuine``/``impostor`` always exist; the probes-by-subjects ``matrix``
    with its ``true_index`` column annotation is present when the scores
    came from an identification-style comparison against templates.
    """

    genuine: np.ndarray
    impostor: np.ndarray
    matrix: np.ndarray | None = None
    true_index: np.ndarray | None = None
    probe_ids: tuple | None = None
    subject_ids: tuple | None = None

    @classmethod
    def from_arrays(cls, genuine, impostor) -> "ScoreSet":
        return cls(
            genuine=np.asarray(genuine, dtype=np.float64).ravel(),
            impostor=np.asarray(impostor, dtype=np.float64).ravel(),
        )

    @classmethod
    def from_matrix(cls, matrix, true_index, probe_ids=None, subject_ids=None) -> "ScoreSet":
        matrix = np.asarray(matrix, dtype=np.float64)
        true_index = np.asarray(true_index, dtype=np.int64)
        if matrix.ndim != 2 or true_index.shape != (matrix.shape[0],):
            raise ValueError("matrix must be (probes, subjects) with one true index per probe")
        if matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise ValueError("score matrix must be non-empty")
        if true_index.min() < 0 or true_index.max() >= matrix.shape[1]:
            raise ValueError("true_index out of range")
        rows = np.arange(matrix.shape[0])
        genuine = matrix[rows, true_index]
        mask = np.ones_like(matrix, dtype=bool)
        mask[rows, true_index] = False
        impostor = matrix[mask]  # row-major over (probe, subject), true column removed
        return cls(
            genuine=genuine,
            impostor=impostor,
            matrix=matrix,
            true_index=true_index,
            probe_ids=tuple(probe_ids) if probe_ids is not None else None,
            subject_ids=tuple(subject_ids) if subject_ids is not None else None,
        )


def cosine_similarity(a, b) -> float:
    """Cosine score a.b / (|a| |b|), in [-1, 1]."""
    va = np.asarray(getattr(a, "values", a), dtype=np.float64)
    vb = np.asarray(getattr(b, "values", b), dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(va @ vb / (norm_a * norm_b))


def build_template(features) -> FeatureVector:
    """Element-wise mean of same-subject features (the enrolled template)."""
    features = list(features)
    if not features:
        raise ValueError("cannot build a template from zero features")
    kinds = {f.kind for f in features if isinstance(f, FeatureVector)}
    if len(kinds) > 1:
        raise ValueError(f"heterogeneous feature kinds: {sorted(k.value for k in kinds)}")
    stack = feature_matrix(features)
    mean = stack.mean(axis=0)
    first = features[0]
    if isinstance(first, FeatureVector):
        return FeatureVector(first.kind, mean, part=first.part, source=None)
    return FeatureVector(FeatureKind.EMBEDDING, mean)


def _check_unique_keys(dataset):
    seen = set()
    for rec, _ in dataset:
        if rec.key in seen:
            raise ValueError(f"duplicate sample key {rec.key}")
        seen.add(rec.key)


def split_gallery_probe(dataset, protocol: Protocol):
    """Deterministic per-subject gallery/probe split.

    Returns (gallery, probes): gallery maps subject_id to its chosen
    (record, feature) pairs; probes is the flat probe list sorted by
    (subject_id, sample_id).  Gallery and probe sets are disjoint per
    subject.  Raises a descriptive error naming the first subject whose
    filtered pool is too small.
    """
    dataset = list(dataset)
    _check_unique_keys(dataset)
    by_subject = {}
    for rec, vec in dataset:
        by_subject.setdefault(rec.subject_id, []).append((rec, vec))

    rng = np.random.default_rng(protocol.split_seed)
    gallery = {}
    probes = []
    for subject_id in sorted(by_subject):
        samples = sorted(by_subject[subject_id], key=lambda rv: rv[0].sample_id)
        if not protocol.include_occluded:
            samples = [rv for rv in samples if not rv[0].occluded]
        pool_g = [rv for rv in samples if rv[0].pose is protocol.gallery_pose]
        order = rng.permutation(len(pool_g))
        if len(pool_g) < protocol.gallery_count:
            raise ValueError(
                f"subject {subject_id!r}: {len(pool_g)} {protocol.gallery_pose.value} "
                f"samples, protocol {protocol.name!r} needs {protocol.gallery_count} "
                f"gallery samples"
            )
        chosen_g = [pool_g[i] for i in order[: protocol.gallery_count]]
        chosen_keys = {rv[0].key for rv in chosen_g}
        pool_p = [
            rv
            for rv in samples
            if rv[0].pose is protocol.probe_pose and rv[0].key not in chosen_keys
        ]
        order_p = rng.permutation(len(pool_p))
        if len(pool_p) < protocol.probe_count:
            raise ValueError(
                f"subject {subject_id!r}: {len(pool_p)} {protocol.probe_pose.value} "
                f"samples left for probing, protocol {protocol.name!r} needs "
                f"{protocol.probe_count}"
            )
        gallery[subject_id] = chosen_g
        probes.extend(pool_p[i] for i in order_p[: protocol.probe_count])

    probes.sort(key=lambda rv: (rv[0].subject_id, rv[0].sample_id))
    return gallery, probes


def _score_matrix(gallery, probes):
    """Cosine scores of every probe against every subject template."""
    subject_ids = sorted(gallery)
    templates = [build_template([vec for _, vec in gallery[s]]) for s in subject_ids]
    template_mat = feature_matrix(templates)
    probe_mat = feature_matrix([vec for _, vec in probes])
    if template_mat.shape[1] != probe_mat.shape[1]:
        raise ValueError(
            f"dimension mismatch: templates {template_mat.shape[1]}, "
            f"probes {probe_mat.shape[1]}"
        )
    for ids, mat, what in (
        (subject_ids, template_mat, "template"),
        ([r.sample_id for r, _ in probes], probe_mat, "probe"),
    ):
        norms = np.linalg.norm(mat, axis=1)
        if np.any(norms == 0.0):
            bad = ids[int(np.flatnonzero(norms == 0.0)[0])]
            raise ValueError(f"zero-norm {what} feature for {bad!r}; cannot score")
    t_unit = template_mat / np.linalg.norm(template_mat, axis=1, keepdims=True)
    p_unit = probe_mat / np.linalg.norm(probe_mat, axis=1, keepdims=True)
    matrix = p_unit @ t_unit.T
    col_of = {s: i for i, s in enumerate(subject_ids)}
    true_index = np.array([col_of[r.subject_id] for r, _ in probes], dtype=np.int64)
    probe_ids = tuple(r.sample_id for r, _ in probes)
    return matrix, true_index, probe_ids, tuple(subject_ids)


def run_verification(dataset, protocol: Protocol) -> ScoreSet:
    """Protocol-driven verification scores (genuine vs impostor).

    Each probe contributes one genuine score (against its own subject's
    template) and S-1 impostor scores.
    """
    gallery, probes = split_gallery_probe(dataset, protocol)
    matrix, true_index, probe_ids, subject_ids = _score_matrix(gallery, probes)
    return ScoreSet.from_matrix(matrix, true_index, probe_ids, subject_ids)


def run_identification(dataset, protocol: Protocol) -> ScoreSet:
    """Probe-by-template cosine score matrix with true-label annotation."""
    return run_verification(dataset, protocol)


def softmax_identification(dataset, protocol: Protocol, cfg=None, model=None) -> ScoreSet:
    """Identification matrix of class probabilities from a softmax head.

    Trains the classifier on the protocol's gallery samples (unless a
    trained model is supplied) and fills the matrix with class-probability
    rows for each probe.
    """
    from .classify import TrainConfig, softmax_probs, train_softmax

    gallery, probes = split_gallery_probe(dataset, protocol)
    subject_ids = sorted(gallery)
    if model is None:
        data = [
            (vec, subject_ids.index(subject))
            for subject in subject_ids
            for _, vec in gallery[subject]
        ]
        model = train_softmax(data, cfg or TrainConfig(), class_labels=subject_ids)
    elif tuple(model.class_labels) != tuple(subject_ids):
        raise ValueError("model class labels do not match the gallery subjects")
    matrix = np.vstack([softmax_probs(model, vec) for _, vec in probes])
    col_of = {s: i for i, s in enumerate(subject_ids)}
    true_index = np.array([col_of[r.subject_id] for r, _ in probes], dtype=np.int64)
    return ScoreSet.from_matrix(
        matrix, true_index, tuple(r.sample_id for r, _ in probes), tuple(subject_ids)
    )


def scores_to_csv(scores: ScoreSet) -> str:
    """Dump matrix-form scores as probe_id,claimed_subject,true_subject,score,label."""
    if scores.matrix is None:
        raise ValueError("CSV dump needs matrix-form scores")
    probe_ids = scores.probe_ids or tuple(f"probe{i}" for i in range(scores.matrix.shape[0]))
    subject_ids = scores.subject_ids or tuple(
        f"subject{j}" for j in range(scores.matrix.shape[1])
    )
    out = io.StringIO()
    out.write("probe_id,claimed_subject,true_subject,score,label\n")
    for i, probe_id in enumerate(probe_ids):
        true_subject = subject_ids[scores.true_index[i]]
        for j, claimed in enumerate(subject_ids):
            label = "genuine" if j == scores.true_index[i] else "impostor"
            out.write(
                f"{probe_id},{claimed},{true_subject},{float(scores.matrix[i, j])!r},{label}\n"
            )
    return out.getvalue()


def scores_from_csv(text: str) -> ScoreSet:
    """Parse a :func:`scores_to_csv` dump back into a matrix ScoreSet."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != "probe_id,claimed_subject,true_subject,score,label":
        raise ValueError("bad score CSV header")
    cells = {}
    true_of = {}
    probe_order = []
    subject_order = []
    for line in lines[1:]:
        probe_id, claimed, true_subject, score, label = line.split(",")
        if probe_id not in true_of:
            probe_order.append(probe_id)
            true_of[probe_id] = true_subject
        if claimed not in subject_order:
            subject_order.append(claimed)
        cells[(probe_id, claimed)] = float(score)
        expected = "genuine" if claimed == true_subject else "impostor"
        if label != expected:
            raise ValueError(f"inconsistent label for {probe_id},{claimed}")
    matrix = np.array(
        [[cells[(p, s)] for s in subject_order] for p in probe_order], dtype=np.float64
    )
    true_index = np.array(
        [subject_order.index(true_of[p]) for p in probe_order], dtype=np.int64
    )
    return ScoreSet.from_matrix(matrix, true_index, tuple(probe_order), tuple(subject_order))
