"""mmwtex: millimeter-wave body-texture person recognition toolkit.

Pipeline building blocks: grayscale preprocessing (crop, bilinear resize,
histogram equalization), blockwise uniform-LBP and HOG descriptors, deep
embedding ingest (MMWFEAT files), cosine/softmax matching, three fusion
levels, and verification/identification metrics (EER, DET, rank-k, CMC).
"""

__version__ = "0.1.0"

from .classify import (
    SoftmaxModel,
    TrainConfig,
    load_model,
    predict_class,
    save_model,
    softmax_probs,
    train_softmax,
)
from .evaluation import (
    CmcCurve,
    DetPoint,
    cmc_curve,
    compute_eer,
    det_curve,
    rank_k_rate,
)
from .featio import (
    BadHeaderError,
    DimensionMismatchError,
    FeatureFileError,
    NonFiniteValueError,
    TruncatedPayloadError,
    l2_normalize,
    load_features,
    read_features,
    save_features,
    write_features,
)
from .fusion import FusionSpec, LateFusionModel, fuse_features, fuse_scores, train_late_fusion
from .hog import HogParams, extract_hog
from .imaging import (
    BodyPart,
    crop,
    equalize_histogram,
    read_pgm,
    resize_bilinear,
    write_pgm,
)
from .lbp import LbpParams, extract_lbp, lbp_code, uniform_bin
from .matching import (
    Protocol,
    ScoreSet,
    build_template,
    cosine_similarity,
    cross_pose_protocol,
    frontal_protocol,
    run_identification,
    run_verification,
)
from .records import FeatureKind, FeatureVector, Pose, SampleRecord
from .synthdata import SynthConfig, generate, load_dataset, write_dataset

__all__ = [
    "BadHeaderError",
    "BodyPart",
    "CmcCurve",
    "DetPoint",
    "DimensionMismatchError",
    "FeatureFileError",
    "FeatureKind",
    "FeatureVector",
    "FusionSpec",
    "HogParams",
    "LateFusionModel",
    "LbpParams",
    "NonFiniteValueError",
    "Pose",
    "Protocol",
    "SampleRecord",
    "ScoreSet",
    "SoftmaxModel",
    "SynthConfig",
    "TrainConfig",
    "TruncatedPayloadError",
    "build_template",
    "cmc_curve",
    "compute_eer",
    "cosine_similarity",
    "crop",
    "cross_pose_protocol",
    "det_curve",
    "equalize_histogram",
    "extract_hog",
    "extract_lbp",
    "frontal_protocol",
    "fuse_features",
    "fuse_scores",
    "generate",
    "l2_normalize",
    "lbp_code",
    "load_dataset",
    "load_features",
    "load_model",
    "predict_class",
    "rank_k_rate",
    "read_features",
    "read_pgm",
    "resize_bilinear",
    "run_identification",
    "run_verification",
    "save_features",
    "save_model",
    "softmax_probs",
    "train_late_fusion",
    "train_softmax",
    "uniform_bin",
    "write_dataset",
    "write_features",
    "write_pgm",
]
