"""Blockwise histograms of oriented gradients.

Gradients come from centered differences with replicated borders.  Each
pixel votes its gradient magnitude into the two orientation bins adjacent
to its unsigned angle (8 bins over [0, 180), circular, linear interpolation
between bin centers) inside the 10x10 block that contains it.  Every block
histogram is then normalized four times, once per 2x2 block neighborhood it
belongs to (L2 energy of the neighborhood + 1e-10, values clipped at
norm_clip, no renormalization), and the four copies are concatenated:
8 orientations x 4 normalizations = 32 values per block.
"""

from dataclasses import dataclass

import numpy as np

from .imaging import as_gray_image
from .records import FeatureKind, FeatureVector

HOG_INPUT_SIZE = (100, 150)  # (width, height) after resize
_NORM_EPS = 1e-10


@dataclass(frozen=True)
class HogParams:
    orientations: int = 8
    block_w: int = 10
    block_h: int = 10
    norm_clip: float = 0.2

    def __post_init__(self):
        if self.orientations < 1:
            raise ValueError("need at least one orientation bin")
        if self.block_w < 1 or self.block_h < 1:
            raise ValueError("block size must be at least 1x1")
        if self.norm_clip <= 0:
            raise ValueError("norm_clip must be positive")

    @property
    def per_block(self) -> int:
        """Descriptor length per block (orientations x 4 normalizations)."""
        return self.orientations * 4


def gradients(img):
    """Centered-difference gradients (gx, gy) with replicated borders.

    Border pixels fall back to the one-sided difference, which is what the
    centered stencil produces once the edge row/column is replicated.
    """
    p = as_gray_image(img).astype(np.float64)
    gx = np.empty_like(p)
    gy = np.empty_like(p)
    gx[:, 1:-1] = p[:, 2:] - p[:, :-2]
    gx[:, 0] = p[:, 1] - p[:, 0]
    gx[:, -1] = p[:, -1] - p[:, -2]
    gy[1:-1, :] = p[2:, :] - p[:-2, :]
    gy[0, :] = p[1, :] - p[0, :]
    gy[-1, :] = p[-1, :] - p[-2, :]
    return gx, gy


def raw_block_histograms(img, params=HogParams()) -> np.ndarray:
    """Magnitude-weighted orientation histograms, shape (by, bx, orientations).

    Votes conserve magnitude: each pixel splits its gradient magnitude
    between the two bins whose centers straddle its unsigned orientation.
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
    n_bins = params.orientations

    gx, gy = gradients(img)
    magnitude = np.hypot(gx, gy)
    angle = np.mod(np.arctan2(gy, gx), np.pi)  # unsigned orientation [0, pi)

    position = angle * (n_bins / np.pi) - 0.5
    low = np.floor(position)
    frac = position - low
    low_bin = (low.astype(np.int64)) % n_bins
    high_bin = (low_bin + 1) % n_bins

    ys, xs = np.mgrid[0:height, 0:width]
    block_ids = (ys // params.block_h) * blocks_x + (xs // params.block_w)
    base = block_ids.ravel() * n_bins
    hist = np.bincount(
        base + low_bin.ravel(),
        weights=(magnitude * (1.0 - frac)).ravel(),
        minlength=blocks_y * blocks_x * n_bins,
    )
    hist += np.bincount(
        base + high_bin.ravel(),
        weights=(magnitude * frac).ravel(),
        minlength=blocks_y * blocks_x * n_bins,
    )
    return hist.reshape(blocks_y, blocks_x, n_bins)


def hog_block_descriptor(img, params=HogParams()) -> np.ndarray:
    """Normalized blockwise descriptor, shape (blocks, orientations * 4).

    Copy c of a block is its raw histogram divided by the energy of the 2x2
    block neighborhood whose top-left corner sits at offset
    [(-1,-1), (-1,0), (0,-1), (0,0)][c] from the block (clamped into the
    grid, which replicates the nearest valid neighborhood at the borders),
    then clipped at norm_clip.  Blocks with no gradient energy stay zero.
    """
    raw = raw_block_histograms(img, params)
    blocks_y, blocks_x, n_bins = raw.shape
    if blocks_y < 2 or blocks_x < 2:
        raise ValueError(
            f"block grid {blocks_x}x{blocks_y} too small for 2x2 neighborhoods"
        )
    # Neighborhood energy: L2 norm of the four member histograms.
    squares = raw * raw
    group_sq = (
        squares[:-1, :-1].sum(axis=2)
        + squares[:-1, 1:].sum(axis=2)
        + squares[1:, :-1].sum(axis=2)
        + squares[1:, 1:].sum(axis=2)
    )
    energy = np.sqrt(group_sq) + _NORM_EPS

    by = np.arange(blocks_y)[:, None]
    bx = np.arange(blocks_x)[None, :]
    copies = []
    for dy, dx in ((-1, -1), (-1, 0), (0, -1), (0, 0)):
        cy = np.clip(by + dy, 0, blocks_y - 2)
        cx = np.clip(bx + dx, 0, blocks_x - 2)
        copies.append(np.minimum(raw / energy[cy, cx][:, :, None], params.norm_clip))
    descriptor = np.concatenate(copies, axis=2)
    return descriptor.reshape(blocks_y * blocks_x, params.per_block)


def extract_hog(img, params=HogParams(), source=None, part=None) -> FeatureVector:
    """Blockwise HOG descriptor of a 100x150 image (dim 4800)."""
    img = as_gray_image(img)
    width, height = HOG_INPUT_SIZE
    if img.shape != (height, width):
        raise ValueError(
            f"HOG extraction expects a {width}x{height} image, got "
            f"{img.shape[1]}x{img.shape[0]}; resize first"
        )
    descriptor = hog_block_descriptor(img, params)
    return FeatureVector(FeatureKind.HOG, descriptor.ravel(), part=part, source=source)
