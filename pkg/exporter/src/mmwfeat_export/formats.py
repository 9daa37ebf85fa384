"""File-format glue: PGM images, dataset manifests, MMWFEAT output.

These mirror the external interfaces of the recognition toolkit (binary P5
PGM, `manifest.csv`, and the `MMWFEAT 1` text container) without importing
it; the exporter talks to the toolkit only through files.
"""

import csv
import os
import re

import numpy as np

MANIFEST_FIELDS = ("sample_id", "subject_id", "part", "pose", "occluded", "path")


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit grayscale PGM into a (h, w) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        match = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\d+)").match(data, pos)
        if match is None:
            raise ValueError(f"{path}: malformed PGM header")
        fields.append(int(match.group(1)))
        pos = match.end()
    width, height, maxval = fields
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    pos += 1
    if len(data) - pos < width * height:
        raise ValueError(f"{path}: truncated PGM payload")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return pixels.reshape(height, width).copy()


def read_manifest(manifest_path):
    """Manifest rows in file order: [(sample_id, subject_id, part, image_path)]."""
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    rows = []
    with open(manifest_path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{manifest_path}: missing manifest columns {sorted(missing)}")
        for row in reader:
            rows.append(
                (
                    row["sample_id"],
                    row["subject_id"],
                    row["part"].strip().lower(),
                    os.path.join(base_dir, row["path"]),
                )
            )
    if not rows:
        raise ValueError(f"{manifest_path}: manifest has no rows")
    return rows


def write_mmwfeat(path, records):
    """Write (subject_id, sample_id, part, vector) tuples as MMWFEAT 1.

    Floats use shortest-round-trip repr so the consumer reads them back
    bit-exactly.
    """
    records = list(records)
    dims = {len(values) for _, _, _, values in records}
    if len(dims) != 1:
        raise ValueError(f"mixed vector dims: {sorted(dims)}")
    dim = dims.pop()
    lines = [f"MMWFEAT 1 {dim} {len(records)}"]
    for subject_id, sample_id, part, values in records:
        values = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite activation for sample {sample_id!r}")
        payload = " ".join(repr(float(v)) for v in values)
        lines.append(f"{subject_id} {sample_id} {part} {payload}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
