"""Blockwise uniform local binary patterns.

The code of a pixel compares 8 circularly sampled neighbors (radius 1)
against the center: bit k is set iff neighbor k >= center.  Neighbor k sits
at angle 2*pi*k/8 counter-clockwise from east (y axis points down), so the
diagonal samples fall between pixels and are bilinearly interpolated.

Sampling contract (pinned by the brute-force oracle tests): the offsets are
``dx = round(r*cos(2*pi*k/n), 10)``, ``dy = round(-r*sin(2*pi*k/n), 10)``;
interpolation uses the lerp form

    top    = p00 + tx * (p01 - p00)
    bottom = p10 + tx * (p11 - p10)
    sample = top + ty * (bottom - top)

with tx, ty the fractional parts of dx, dy (the +1 index is never touched
when the fractional part is 0).  The lerp form is exact on flat patches, so
a constant image always yields code 255.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .imaging import as_gray_image
from .records import FeatureKind, FeatureVector

LBP_INPUT_SIZE = (100, 150)  # (width, height) after resize


@dataclass(frozen=True)
class LbpParams:
    radius: float = 1.0
    neighbors: int = 8
    uniform: bool = True
    block_w: int = 10
    block_h: int = 10

    def __post_init__(self):
        if self.radius <= 0 or self.neighbors < 2:
            raise ValueError("radius must be positive and neighbors >= 2")
        if self.block_w < 1 or self.block_h < 1:
            raise ValueError("block size must be at least 1x1")

    @property
    def bins(self) -> int:
        """Histogram length per block: 59 for uniform 8-neighbor patterns."""
        if self.uniform:
            return self.neighbors * (self.neighbors - 1) + 3
        return 1 << self.neighbors

    @property
    def border(self) -> int:
        """Pixels near the image border whose neighborhood is incomplete."""
        return int(math.ceil(self.radius))


def circle_offsets(radius=1.0, neighbors=8):
    """(dx, dy) sampling offsets, rounded so axis-aligned neighbors are exact."""
    offsets = []
    for k in range(neighbors):
        angle = 2.0 * math.pi * k / neighbors
        dx = round(radius * math.cos(angle), 10)
        dy = round(-radius * math.sin(angle), 10)
        offsets.append((dx, dy))
    return offsets


def _sample_bilinear(img_f, x, y, dx, dy):
    """Interpolate img_f at (x + dx, y + dy) per the sampling contract."""
    fx0 = math.floor(dx)
    fy0 = math.floor(dy)
    tx = dx - fx0
    ty = dy - fy0
    x0 = x + fx0
    y0 = y + fy0
    x1 = x0 + 1 if tx != 0.0 else x0
    y1 = y0 + 1 if ty != 0.0 else y0
    p00 = img_f[y0, x0]
    p01 = img_f[y0, x1]
    p10 = img_f[y1, x0]
    p11 = img_f[y1, x1]
    top = p00 + tx * (p01 - p00)
    bottom = p10 + tx * (p11 - p10)
    return top + ty * (bottom - top)


def lbp_code(img, x, y, params=LbpParams()) -> int:
    """LBP code of the pixel at (x, y); requires a complete neighborhood."""
    img = as_gray_image(img)
    height, width = img.shape
    border = params.border
    if not (border <= x < width - border and border <= y < height - border):
        raise ValueError(
            f"pixel ({x}, {y}) is within {border} px of the border of a "
            f"{width}x{height} image; LBP needs the full neighborhood"
        )
    img_f = img.astype(np.float64)
    center = img_f[y, x]
    code = 0
    for k, (dx, dy) in enumerate(circle_offsets(params.radius, params.neighbors)):
        if _sample_bilinear(img_f, x, y, dx, dy) >= center:
            code |= 1 << k
    return code


@lru_cache(maxsize=None)
def _uniform_lut(neighbors=8) -> np.ndarray:
    """Map each code to its uniform-pattern bin.

    Codes with at most 2 circular 0-1 transitions get bins 0..(U-1) in
    ascending code order; everything else lands in the catch-all bin U.
    For 8 neighbors that is 58 uniform codes plus bin 58.
    """
    size = 1 << neighbors
    mask = size - 1
    uniform_codes = []
    for code in range(size):
        rotated = ((code << 1) | (code >> (neighbors - 1))) & mask
        transitions = bin(code ^ rotated).count("1")
        if transitions <= 2:
            uniform_codes.append(code)
    lut = np.full(size, len(uniform_codes), dtype=np.int64)
    for bin_index, code in enumerate(uniform_codes):
        lut[code] = bin_index
    return lut


def uniform_bin(code: int) -> int:
    """Uniform-pattern bin in [0, 58] for an 8-neighbor code in [0, 255]."""
    if not 0 <= code <= 255:
        raise ValueError(f"code must be in [0, 255], got {code}")
    return int(_uniform_lut(8)[code])


def lbp_code_map(img, params=LbpParams()) -> np.ndarray:
    """Codes for every interior pixel, shape (h - 2*border, w - 2*border).

    Vectorized over the image; bit-identical to calling :func:`lbp_code`
    per pixel (the arithmetic is the same lerp expression element-wise).
    """
    img = as_gray_image(img)
    height, width = img.shape
    border = params.border
    if height <= 2 * border or width <= 2 * border:
        raise ValueError(f"image {width}x{height} too small for radius {params.radius}")
    img_f = img.astype(np.float64)
    center = img_f[border : height - border, border : width - border]
    codes = np.zeros(center.shape, dtype=np.int64)
    for k, (dx, dy) in enumerate(circle_offsets(params.radius, params.neighbors)):
        fx0 = math.floor(dx)
        fy0 = math.floor(dy)
        tx = dx - fx0
        ty = dy - fy0
        fx1 = fx0 + 1 if tx != 0.0 else fx0
        fy1 = fy0 + 1 if ty != 0.0 else fy0

        def shifted(ox, oy):
            return img_f[
                border + oy : height - border + oy, border + ox : width - border + ox
            ]

        p00 = shifted(fx0, fy0)
        p01 = shifted(fx1, fy0)
        p10 = shifted(fx0, fy1)
        p11 = shifted(fx1, fy1)
        top = p00 + tx * (p01 - p00)
        bottom = p10 + tx * (p11 - p10)
        sample = top + ty * (bottom - top)
        codes |= (sample >= center).astype(np.int64) << k
    return codes


def lbp_block_histograms(img, params=LbpParams(), normalize=True) -> np.ndarray:
    """Per-block histograms of uniform-pattern bins, shape (blocks, bins).

    The image is tiled by non-overlapping block_w x block_h blocks (its size
    must divide evenly); blocks are ordered row-major.  Only interior pixels
    (full LBP neighborhood inside the image) are tallied, and each non-empty
    histogram is L1-normalized to sum 1.
    """
    img = as_gray_image(img)
    height, width = img.shape
    if height % params.block_h or width % params.block_w:
        raise ValueError(
            f"image {width}x{height} is not tiled by "
            f"{params.block_w}x{params.block_h} blocks"
        )
    blocks_x = width // params.block_w
    blocks_y = height // params.block_h
    n_blocks = blocks_x * blocks_y
    n_bins = params.bins

    codes = lbp_code_map(img, params)
    lut = _uniform_lut(params.neighbors) if params.uniform else None
    bins = lut[codes] if lut is not None else codes

    border = params.border
    ys, xs = np.mgrid[border : height - border, border : width - border]
    block_ids = (ys // params.block_h) * blocks_x + (xs // params.block_w)
    flat = block_ids.ravel() * n_bins + bins.ravel()
    hist = np.bincount(flat, minlength=n_blocks * n_bins).astype(np.float64)
    hist = hist.reshape(n_blocks, n_bins)
    if normalize:
        sums = hist.sum(axis=1)
        occupied = sums > 0
        hist[occupied] = hist[occupied] / sums[occupied, None]
    return hist


def extract_lbp(img, params=LbpParams(), source=None, part=None) -> FeatureVector:
    """Blockwise uniform-LBP descriptor of a 100x150 image (dim 8850)."""
    img = as_gray_image(img)
    width, height = LBP_INPUT_SIZE
    if img.shape != (height, width):
        raise ValueError(
            f"LBP extraction expects a {width}x{height} image, got "
            f"{img.shape[1]}x{img.shape[0]}; resize first"
        )
    hist = lbp_block_histograms(img, params)
    return FeatureVector(FeatureKind.LBP, hist.ravel(), part=part, source=source)
