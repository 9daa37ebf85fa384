"""Seeded synthetic mmW-like dataset generator.

Each subject gets one base texture per body part: a uniform-noise field
smoothed with a box kernel (width texture_scale) and stretched to the full
intensity range, at the part's nominal crop size.  Samples add Gaussian
intensity noise (std intra_noise, clamped to [0, 255]); lateral-pose
samples are additionally shifted right by pose_shift pixels with edge
replication.  Everything is drawn from one PCG64 generator seeded by
``seed``, so a given config reproduces bit-identical datasets.

Setting identity_signal=False draws a fresh base texture for every sample,
which removes all subject information and drives matchers to chance level.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .imaging import BodyPart, read_pgm, write_pgm
from .records import Pose, SampleRecord

MANIFEST_FIELDS = ("sample_id", "subject_id", "part", "pose", "occluded", "path")


@dataclass(frozen=True)
class SynthConfig:
    subjects: int = 50
    samples_per_pose: int = 2
    parts: tuple = (BodyPart.TORSO,)
    intra_noise: float = 4.0
    pose_shift: int = 8
    texture_scale: int = 5
    seed: int = 0
    identity_signal: bool = True

    def __post_init__(self):
        if self.subjects < 1 or self.samples_per_pose < 1:
            raise ValueError("subjects and samples_per_pose must be at least 1")
        if self.intra_noise < 0 or self.pose_shift < 0:
            raise ValueError("intra_noise and pose_shift must be non-negative")
        if self.texture_scale < 1:
            raise ValueError("texture_scale must be at least 1")
        if not self.parts:
            raise ValueError("at least one body part required")


def _base_texture(rng, width, height, scale) -> np.ndarray:
    noise = rng.random((height, width))
    smooth = uniform_filter(noise, size=scale, mode="nearest")
    low, high = smooth.min(), smooth.max()
    if high == low:
        return np.full((height, width), 127.5)
    return (smooth - low) * (255.0 / (high - low))


def _shift_right(img: np.ndarray, shift: int) -> np.ndarray:
    if shift == 0:
        return img
    shift = min(shift, img.shape[1])
    out = np.empty_like(img)
    out[:, shift:] = img[:, : img.shape[1] - shift]
    out[:, :shift] = img[:, :1]  # replicate the left edge column
    return out


def generate(cfg: SynthConfig):
    """Generate [(SampleRecord, image)] for every subject, part, pose, sample."""
    rng = np.random.default_rng(cfg.seed)
    dataset = []
    for part in cfg.parts:
        width, height = part.nominal_crop
        for s in range(cfg.subjects):
            subject_id = f"s{s:03d}"
            base = _base_texture(rng, width, height, cfg.texture_scale)
            for pose in (Pose.FRONTAL, Pose.LATERAL):
                for j in range(cfg.samples_per_pose):
                    if cfg.identity_signal:
                        source = base
                    else:
                        source = _base_texture(rng, width, height, cfg.texture_scale)
                    noisy = source + rng.normal(0.0, cfg.intra_noise, source.shape)
                    img = np.clip(np.floor(noisy + 0.5), 0, 255).astype(np.uint8)
                    if pose is Pose.LATERAL:
                        img = _shift_right(img, cfg.pose_shift)
                    record = SampleRecord(
                        subject_id=subject_id,
                        sample_id=f"{subject_id}_{pose.value}{j}",
                        part=part,
                        pose=pose,
                        occluded=False,
                    )
                    dataset.append((record, img))
    return dataset


def write_dataset(dataset, out_dir) -> str:
    """Write PGM files (one directory per part) plus the manifest CSV.

    Returns the manifest path.  Manifest columns:
    sample_id,subject_id,part,pose,occluded,path with paths relative to the
    manifest directory.  Rows are sorted for byte-identical reruns.
    """
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for record, img in dataset:
        part_dir = os.path.join(out_dir, record.part.value)
        os.makedirs(part_dir, exist_ok=True)
        rel_path = os.path.join(record.part.value, f"{record.sample_id}.pgm")
        write_pgm(os.path.join(out_dir, rel_path), img)
        rows.append(
            {
                "sample_id": record.sample_id,
                "subject_id": record.subject_id,
                "part": record.part.value,
                "pose": record.pose.value,
                "occluded": "1" if record.occluded else "0",
                "path": rel_path,
            }
        )
    rows.sort(key=lambda r: (r["part"], r["subject_id"], r["sample_id"]))
    manifest_path = os.path.join(out_dir, "manifest.csv")
    with open(manifest_path, "w", encoding="ascii", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return manifest_path


def read_manifest(manifest_path):
    """Parse the manifest into [(SampleRecord, absolute image path)]."""
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    entries = []
    with open(manifest_path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{manifest_path}: missing manifest columns {sorted(missing)}")
        for row in reader:
            record = SampleRecord(
                subject_id=row["subject_id"],
                sample_id=row["sample_id"],
                part=BodyPart.from_string(row["part"]),
                pose=Pose.from_string(row["pose"]),
                occluded=row["occluded"].strip() in ("1", "true", "yes"),
            )
            entries.append((record, os.path.join(base_dir, row["path"])))
    return entries


def load_dataset(manifest_path):
    """Read the manifest and all referenced PGM images."""
    return [(record, read_pgm(path)) for record, path in read_manifest(manifest_path)]
