"""Feature-vector persistence: the MMWFEAT 1 text format.

One ASCII header line ``MMWFEAT 1 <dim> <count>`` followed by one record
per line: ``subject_id sample_id part v1 ... vdim``.  Floats are serialized
with shortest-round-trip precision (Python repr), so write/read round-trips
are bit-exact.  The same container is used for every feature kind: deep
embeddings ingested from an exporter, hand-crafted LBP/HOG descriptors, and
fused vectors.  Loading never repairs data; every invariant violation
raises a distinct error type.
"""

import numpy as np

from .imaging import BodyPart
from .records import FeatureKind, FeatureVector, SampleRecord

MAGIC = "MMWFEAT"
VERSION = 1


class FeatureFileError(ValueError):
    """Base error for malformed MMWFEAT content."""


class BadHeaderError(FeatureFileError):
    """Wrong magic, unsupported version, or unparseable header fields."""


class TruncatedPayloadError(FeatureFileError):
    """Fewer records (or record fields) than the header promises."""


class DimensionMismatchError(FeatureFileError):
    """A record's dimensionality disagrees with the header or its peers."""


class NonFiniteValueError(FeatureFileError):
    """A NaN or infinity in the payload."""


def write_features(records) -> bytes:
    """Serialize (SampleRecord, FeatureVector) pairs to MMWFEAT bytes."""
    records = list(records)
    if not records:
        return f"{MAGIC} {VERSION} 0 0\n".encode("ascii")
    dims = {vec.dim for _, vec in records}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed feature dims in one file: {sorted(dims)}")
    dim = dims.pop()
    lines = [f"{MAGIC} {VERSION} {dim} {len(records)}"]
    for rec, vec in records:
        if not rec.subject_id or not rec.sample_id:
            raise FeatureFileError("subject_id and sample_id must be non-empty")
        for ident in (rec.subject_id, rec.sample_id):
            if any(ch.isspace() for ch in ident):
                raise FeatureFileError(f"identifier {ident!r} contains whitespace")
        values = np.asarray(vec.values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise NonFiniteValueError(f"non-finite value in record {rec.sample_id!r}")
        payload = " ".join(repr(float(v)) for v in values)
        lines.append(f"{rec.subject_id} {rec.sample_id} {rec.part.value} {payload}")
    return ("\n".join(lines) + "\n").encode("ascii")


def read_features(data, kind=FeatureKind.EMBEDDING):
    """Parse MMWFEAT bytes into (SampleRecord, FeatureVector) pairs.

    The format does not store the feature kind, pose, or occlusion flag;
    callers declare the kind and join pose metadata from the dataset
    manifest when they need it.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise BadHeaderError(f"not an ASCII MMWFEAT file: {exc}") from None
    else:
        text = data
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise BadHeaderError("empty file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != MAGIC:
        raise BadHeaderError(f"bad header line {lines[0]!r}")
    if header[1] != str(VERSION):
        raise BadHeaderError(f"unsupported version {header[1]!r}")
    try:
        dim = int(header[2])
        count = int(header[3])
    except ValueError:
        raise BadHeaderError(f"non-integer header fields in {lines[0]!r}") from None
    if dim < 0 or count < 0 or (count > 0 and dim == 0):
        raise BadHeaderError(f"invalid dim/count {dim}/{count}")

    body = lines[1:]
    if len(body) < count:
        raise TruncatedPayloadError(f"header promises {count} records, found {len(body)}")
    if len(body) > count:
        raise FeatureFileError(f"header promises {count} records, found {len(body)}")

    records = []
    for lineno, line in enumerate(body, start=2):
        tokens = line.split()
        expected = 3 + dim
        if len(tokens) < expected:
            raise TruncatedPayloadError(
                f"line {lineno}: record truncated ({len(tokens)} of {expected} fields)"
            )
        if len(tokens) > expected:
            raise DimensionMismatchError(
                f"line {lineno}: record has {len(tokens) - 3} values, header says {dim}"
            )
        subject_id, sample_id, part_name = tokens[:3]
        try:
            part = BodyPart.from_string(part_name)
        except ValueError as exc:
            raise FeatureFileError(f"line {lineno}: {exc}") from None
        try:
            values = np.array([float(t) for t in tokens[3:]], dtype=np.float64)
        except ValueError:
            raise FeatureFileError(f"line {lineno}: unparseable value") from None
        if not np.all(np.isfinite(values)):
            raise NonFiniteValueError(f"line {lineno}: non-finite value")
        rec = SampleRecord(subject_id=subject_id, sample_id=sample_id, part=part)
        records.append((rec, FeatureVector(kind, values, part=part, source=rec)))
    return records


def save_features(path, records):
    """Write records to ``path`` in MMWFEAT format."""
    data = write_features(records)
    with open(path, "wb") as fh:
        fh.write(data)


def load_features(path, kind=FeatureKind.EMBEDDING):
    """Read an MMWFEAT file from disk."""
    with open(path, "rb") as fh:
        return read_features(fh.read(), kind=kind)


def l2_normalize(vec):
    """Scale a vector to unit L2 norm (direction preserved).

    Accepts a FeatureVector or a plain array and returns the same type.
    """
    if isinstance(vec, FeatureVector):
        values = l2_normalize(vec.values)
        return FeatureVector(vec.kind, values, part=vec.part, source=vec.source)
    values = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return values / norm
