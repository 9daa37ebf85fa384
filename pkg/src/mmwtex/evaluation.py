"""Verification and identification metrics: EER, DET points, rank-k, CMC.

Scores are similarities throughout (higher means more genuine); negate
distances before calling in here.  The threshold sweep is the discrete
convention: candidates are every distinct score, every midpoint between
adjacent distinct scores, and one value beyond each end, with
FAR(t) = fraction of impostor scores >= t and FRR(t) = fraction of genuine
scores < t.  EER is (FAR + FRR) / 2 at the candidate minimizing |FAR - FRR|
(ties resolved to the lower threshold), which makes the value exactly
invariant under positive affine transforms of the scores.
"""

from dataclasses import dataclass

import numpy as np

from .matching import ScoreSet


@dataclass(frozen=True)
class DetPoint:
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class CmcCurve:
    """Cumulative identification rate per rank (index 0 is rank 1)."""

    rates: tuple

    def __len__(self):
        return len(self.rates)

    def rate(self, k: int) -> float:
        if not 1 <= k <= len(self.rates):
            raise ValueError(f"rank {k} out of range 1..{len(self.rates)}")
        return self.rates[k - 1]


def _genuine_impostor(scores):
    if isinstance(scores, ScoreSet):
        genuine, impostor = scores.genuine, scores.impostor
    else:
        genuine, impostor = scores
    genuine = np.asarray(genuine, dtype=np.float64).ravel()
    impostor = np.asarray(impostor, dtype=np.float64).ravel()
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("need at least one genuine and one impostor score")
    if not (np.all(np.isfinite(genuine)) and np.all(np.isfinite(impostor))):
        raise ValueError("scores must be finite")
    return genuine, impostor


def candidate_thresholds(genuine, impostor) -> np.ndarray:
    """Every distinct score, adjacent midpoints, and one value past each end."""
    distinct = np.unique(np.concatenate([genuine, impostor]))
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    return np.sort(
        np.concatenate([[distinct[0] - 1.0], distinct, midpoints, [distinct[-1] + 1.0]])
    )


def _far_frr(genuine, impostor, thresholds):
    gen_sorted = np.sort(genuine)
    imp_sorted = np.sort(impostor)
    # impostor >= t accepted falsely; genuine < t rejected falsely
    far = (imp_sorted.size - np.searchsorted(imp_sorted, thresholds, side="left")) / imp_sorted.size
    frr = np.searchsorted(gen_sorted, thresholds, side="left") / gen_sorted.size
    return far, frr


def compute_eer(scores):
    """(EER, threshold) from a ScoreSet or a (genuine, impostor) pair."""
    genuine, impostor = _genuine_impostor(scores)
    thresholds = candidate_thresholds(genuine, impostor)
    far, frr = _far_frr(genuine, impostor, thresholds)
    index = int(np.argmin(np.abs(far - frr)))  # first minimum = lowest threshold
    eer = (far[index] + frr[index]) / 2.0
    return float(eer), float(thresholds[index])


def det_curve(scores):
    """DET staircase: one DetPoint per distinct (far, frr) operating point.

    Points are sorted by increasing threshold (far non-increasing, frr
    non-decreasing); runs of candidates with the same operating point keep
    the lowest threshold, so the EER operating point is always present.
    """
    genuine, impostor = _genuine_impostor(scores)
    thresholds = candidate_thresholds(genuine, impostor)
    far, frr = _far_frr(genuine, impostor, thresholds)
    points = []
    for t, fa, fr in zip(thresholds, far, frr):
        if points and points[-1].far == fa and points[-1].frr == fr:
            continue
        points.append(DetPoint(threshold=float(t), far=float(fa), frr=float(fr)))
    return points


def _true_ranks(scores: ScoreSet) -> np.ndarray:
    """Pessimistic rank of the true subject per probe row.

    Tied competitors count as ranked above the true subject, so the rank is
    1 + #{other columns with score >= true score}.
    """
    if scores.matrix is None or scores.true_index is None:
        raise ValueError("rank metrics need matrix-form scores")
    matrix = scores.matrix
    rows = np.arange(matrix.shape[0])
    true_scores = matrix[rows, scores.true_index]
    at_least = (matrix >= true_scores[:, None]).sum(axis=1)
    return at_least  # includes the true column itself: 1 + #others >= true


def rank_k_rate(scores: ScoreSet, k: int) -> float:
    """Fraction of probes whose true subject lands in the top k."""
    ranks = _true_ranks(scores)
    n_subjects = scores.matrix.shape[1]
    if not 1 <= k <= n_subjects:
        raise ValueError(f"rank {k} out of range 1..{n_subjects}")
    return float(np.mean(ranks <= k))


def cmc_curve(scores: ScoreSet) -> CmcCurve:
    """rank_k_rate for every k = 1..N as one curve."""
    ranks = _true_ranks(scores)
    n_subjects = scores.matrix.shape[1]
    counts = np.bincount(ranks, minlength=n_subjects + 1)[1:]
    rates = np.cumsum(counts) / ranks.size
    return CmcCurve(rates=tuple(float(r) for r in rates))


def det_to_csv(points) -> str:
    lines = ["threshold,far,frr"]
    lines += [f"{p.threshold!r},{p.far!r},{p.frr!r}" for p in points]
    return "\n".join(lines) + "\n"


def cmc_to_csv(curve: CmcCurve) -> str:
    lines = ["rank,rate"]
    lines += [f"{k},{rate!r}" for k, rate in enumerate(curve.rates, start=1)]
    return "\n".join(lines) + "\n"
