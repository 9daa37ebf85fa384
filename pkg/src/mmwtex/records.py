"""Sample metadata and feature-vector containers shared across the pipeline."""

import enum
from dataclasses import dataclass, field

import numpy as np

from .imaging import BodyPart


class Pose(enum.Enum):
    FRONTAL = "frontal"
    LATERAL = "lateral"

    @classmethod
    def from_string(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown pose {text!r}") from None


class FeatureKind(enum.Enum):
    LBP = "lbp"
    HOG = "hog"
    EMBEDDING = "embedding"
    FUSED = "fused"


# Dimensionalities pinned by the 100x150 / 10x10-block feature geometry:
# LBP: 10 x 15 blocks x 59 uniform-pattern bins, HOG: 150 blocks x (8 x 4).
LBP_DIM = 8850
HOG_DIM = 4800

_FIXED_DIMS = {FeatureKind.LBP: LBP_DIM, FeatureKind.HOG: HOG_DIM}
_NONNEGATIVE_KINDS = frozenset({FeatureKind.LBP, FeatureKind.HOG})


@dataclass(frozen=True)
class SampleRecord:
    """One scan of one body part: who, which sample, which pose."""

    subject_id: str
    sample_id: str
    part: BodyPart
    pose: Pose = Pose.FRONTAL
    occluded: bool = False

    @property
    def key(self):
        """Uniqueness key within a dataset."""
        return (self.subject_id, self.sample_id, self.part)


@dataclass
class FeatureVector:
    """A flat descriptor with provenance metadata.

    values is always a finite float64 1-D array; LBP/HOG kinds additionally
    pin their dimensionality and non-negativity.
    """

    kind: FeatureKind
    values: np.ndarray
    part: BodyPart | None = None
    source: SampleRecord | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"feature values must be 1-D, got shape {values.shape}")
        if values.size == 0:
            raise ValueError("feature vector must be non-empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        fixed = _FIXED_DIMS.get(self.kind)
        if fixed is not None and values.size != fixed:
            raise ValueError(
                f"{self.kind.value} features must have dim {fixed}, got {values.size}"
            )
        if self.kind in _NONNEGATIVE_KINDS and values.min() < 0:
            raise ValueError(f"{self.kind.value} features must be non-negative")
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.size


def feature_matrix(features) -> np.ndarray:
    """Stack feature vectors (or arrays) into one (n, dim) float64 matrix."""
    rows = [np.asarray(getattr(f, "values", f), dtype=np.float64) for f in features]
    if not rows:
        raise ValueError("no feature vectors given")
    dims = {row.size for row in rows}
    if len(dims) != 1:
        raise ValueError(f"heterogeneous feature dims: {sorted(dims)}")
    return np.vstack(rows)
