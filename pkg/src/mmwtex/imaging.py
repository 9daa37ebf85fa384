"""Grayscale image container and preprocessing.

Images are plain 2-D numpy arrays of dtype uint8 with shape (height, width)
and intensities in [0, 255].  All operations are pure functions: they never
modify their input and are safe to run concurrently over distinct images.

Preprocessing ahead of feature extraction follows the mmW pipeline: crop a
body part out of the scan, histogram-equalize faces (torso and whole body
are left untouched), then resize to the 100x150 feature geometry.
"""

import enum
import re

import numpy as np


class BodyPart(enum.Enum):
    """Body regions cropped from a scan, with their nominal crop sizes."""

    FACE = "face"
    TORSO = "torso"
    WHOLEBODY = "wholebody"

    @property
    def nominal_crop(self):
        """Nominal (width, height) of the manually annotated bounding box."""
        return _NOMINAL_CROPS[self]

    @classmethod
    def from_string(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown body part {text!r}") from None


_NOMINAL_CROPS = {
    BodyPart.FACE: (70, 90),
    BodyPart.TORSO: (120, 170),
    BodyPart.WHOLEBODY: (250, 450),
}

# Parts that get histogram equalization by default; torso and whole body
# are matched on raw radiometric intensities.
EQUALIZED_PARTS = frozenset({BodyPart.FACE})


def as_gray_image(pixels) -> np.ndarray:
    """Validate ``pixels`` as a grayscale image and return it as uint8.

    Accepts any 2-D array-like with integer intensities in [0, 255].
    """
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValueError(f"grayscale image must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("grayscale image must be non-empty")
    if arr.dtype == np.uint8:
        return arr
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise ValueError("intensities must be integer levels")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("intensities must lie in [0, 255]")
    return arr.astype(np.uint8)


def crop(img, box) -> np.ndarray:
    """Extract the rectangle ``box = (x, y, w, h)`` from ``img``.

    The box must lie fully inside the image; pixel (col, row) of the result
    equals source pixel (x + col, y + row).
    """
    img = as_gray_image(img)
    x, y, w, h = (int(v) for v in box)
    height, width = img.shape
    if w <= 0 or h <= 0:
        raise ValueError(f"crop box must have positive size, got {w}x{h}")
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(
            f"crop box (x={x}, y={y}, w={w}, h={h}) exceeds image bounds "
            f"{width}x{height}"
        )
    return img[y : y + h, x : x + w].copy()


def resize_bilinear(img, out_w, out_h) -> np.ndarray:
    """Resize ``img`` to (out_w, out_h) pixels by bilinear interpolation.

    Source coordinates follow the center-aligned convention
    ``src = (dst + 0.5) * scale - 0.5`` clamped to the image bounds, and
    interpolated values are rounded half-up to integer levels.  Outputs are
    therefore always inside [min(img), max(img)].
    """
    img = as_gray_image(img)
    out_w, out_h = int(out_w), int(out_h)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target size must be at least 1x1, got {out_w}x{out_h}")
    in_h, in_w = img.shape

    src_x = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    src_y = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    x0 = np.floor(src_x).astype(np.intp)
    y0 = np.floor(src_y).astype(np.intp)
    tx = src_x - x0
    ty = src_y - y0
    # When the fractional part is 0 the +1 neighbor has zero weight; reuse
    # the base index so the lookup never leaves the image.
    x1 = np.where(tx > 0, x0 + 1, x0)
    y1 = np.where(ty > 0, y0 + 1, y0)

    p = img.astype(np.float64)
    a = p[np.ix_(y0, x0)]
    b = p[np.ix_(y0, x1)]
    c = p[np.ix_(y1, x0)]
    d = p[np.ix_(y1, x1)]
    top = a + tx * (b - a)
    bottom = c + tx * (d - c)
    values = top + ty[:, None] * (bottom - top)
    return np.floor(values + 0.5).clip(0, 255).astype(np.uint8)


def equalize_histogram(img) -> np.ndarray:
    """Global histogram equalization over the 256 intensity levels.

    Maps level v to floor(255 * cdf(v) / N + 0.5).  The mapping is monotone
    and exactly idempotent (a second application changes nothing).  Constant
    images come back unchanged.
    """
    img = as_gray_image(img)
    hist = np.bincount(img.ravel(), minlength=256)
    if np.count_nonzero(hist) <= 1:
        return img.copy()
    cdf = np.cumsum(hist, dtype=np.float64)
    lut = np.floor(255.0 * cdf / img.size + 0.5).astype(np.uint8)
    return lut[img]


def write_pgm(path, img):
    """Write ``img`` as a binary (P5) 8-bit PGM file."""
    img = as_gray_image(img)
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit grayscale PGM file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # Header: magic, width, height, maxval; '#' starts a comment line.
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
    pos += 1  # single whitespace byte after maxval
    if len(data) - pos < width * height:
        raise ValueError(f"{path}: truncated PGM payload")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return pixels.reshape(height, width).copy()


def read_boxes(path) -> dict:
    """Parse a bounding-box sidecar file.

    One line per sample: ``sample_id part x y w h``.  Returns a dict mapping
    (sample_id, BodyPart) to an (x, y, w, h) tuple.
    """
    boxes = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 6:
                raise ValueError(f"{path}:{lineno}: expected 'sample_id part x y w h'")
            sample_id, part_name = tokens[0], tokens[1]
            part = BodyPart.from_string(part_name)
            x, y, w, h = (int(t) for t in tokens[2:])
            boxes[(sample_id, part)] = (x, y, w, h)
    return boxes


def write_boxes(path, boxes):
    """Inverse of :func:`read_boxes` (keys sorted for determinism)."""
    with open(path, "w", encoding="ascii") as fh:
        for (sample_id, part), (x, y, w, h) in sorted(
            boxes.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        ):
            fh.write(f"{sample_id} {part.value} {x} {y} {w} {h}\n")
