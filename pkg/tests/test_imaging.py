"""Preprocessing tests: crop/resize/equalize against hand and scalar oracles."""

import math

import numpy as np
import pytest

from mmwtex.imaging import (
    BodyPart,
    crop,
    equalize_histogram,
    read_boxes,
    read_pgm,
    resize_bilinear,
    write_boxes,
    write_pgm,
)


def random_image(rng, width, height):
    return rng.integers(0, 256, size=(height, width), dtype=np.uint8)


# ----------------------------------------------------------------------
# crop


class TestCrop:
    def test_full_extent_is_identity(self):
        rng = np.random.default_rng(0)
        img = random_image(rng, 10, 10)
        np.testing.assert_array_equal(crop(img, (0, 0, 10, 10)), img)

    def test_quadrant_matches_direct_indexing(self):
        rng = np.random.default_rng(1)
        img = random_image(rng, 10, 10)
        out = crop(img, (0, 0, 5, 5))
        assert out.shape == (5, 5)
        for y in range(5):
            for x in range(5):
                assert out[y, x] == img[y, x]

    def test_offset_box_matches_direct_indexing(self):
        rng = np.random.default_rng(2)
        img = random_image(rng, 17, 13)
        x0, y0, w, h = 3, 2, 9, 8
        out = crop(img, (x0, y0, w, h))
        for y in range(h):
            for x in range(w):
                assert out[y, x] == img[y0 + y, x0 + x]

    def test_out_of_bounds_rejected(self):
        img = np.zeros((10, 10), dtype=np.uint8)
        with pytest.raises(ValueError, match="exceeds image bounds"):
            crop(img, (8, 8, 5, 5))
        with pytest.raises(ValueError):
            crop(img, (-1, 0, 5, 5))
        with pytest.raises(ValueError):
            crop(img, (0, 0, 0, 5))

    def test_crop_composes(self):
        rng = np.random.default_rng(3)
        img = random_image(rng, 40, 30)
        inner = crop(crop(img, (5, 4, 20, 18)), (3, 6, 10, 9))
        direct = crop(img, (5 + 3, 4 + 6, 10, 9))
        np.testing.assert_array_equal(inner, direct)


# ----------------------------------------------------------------------
# resize


def oracle_resize(img, out_w, out_h):
    """Scalar bilinear oracle following the documented coordinate mapping."""
    in_h, in_w = img.shape
    out = np.zeros((out_h, out_w), dtype=np.uint8)
    for oy in range(out_h):
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * (in_w / out_w) - 0.5, 0.0), in_w - 1.0)
            sy = min(max((oy + 0.5) * (in_h / out_h) - 0.5, 0.0), in_h - 1.0)
            x0 = math.floor(sx)
            y0 = math.floor(sy)
            tx = sx - x0
            ty = sy - y0
            x1 = x0 + 1 if tx > 0 else x0
            y1 = y0 + 1 if ty > 0 else y0
            p00 = float(img[y0, x0])
            p01 = float(img[y0, x1])
            p10 = float(img[y1, x0])
            p11 = float(img[y1, x1])
            top = p00 + tx * (p01 - p00)
            bottom = p10 + tx * (p11 - p10)
            value = top + ty * (bottom - top)
            out[oy, ox] = int(min(max(math.floor(value + 0.5), 0), 255))
    return out


class TestResizeBilinear:
    def test_identity_size_is_identical(self):
        rng = np.random.default_rng(4)
        img = random_image(rng, 23, 17)
        np.testing.assert_array_equal(resize_bilinear(img, 23, 17), img)

    def test_constant_stays_constant(self):
        img = np.full((6, 9), 7, dtype=np.uint8)
        for w, h in ((3, 3), (20, 11), (1, 1)):
            out = resize_bilinear(img, w, h)
            assert out.shape == (h, w)
            assert np.all(out == 7)

    def test_two_pixel_upsample_closed_form(self):
        # (dst + 0.5) * (2/3) - 0.5 gives src -1/6 (clamped 0), 0.5, 7/6
        # (clamped 1) -> values 0, 127.5 (rounds half-up to 128), 255.
        img = np.array([[0, 255]], dtype=np.uint8)
        out = resize_bilinear(img, 3, 1)
        np.testing.assert_array_equal(out, [[0, 128, 255]])

    @pytest.mark.parametrize("shape_out", [(7, 5), (30, 40), (13, 4), (1, 9)])
    def test_matches_scalar_oracle(self, shape_out):
        rng = np.random.default_rng(5)
        img = random_image(rng, 12, 16)
        out_w, out_h = shape_out
        np.testing.assert_array_equal(
            resize_bilinear(img, out_w, out_h), oracle_resize(img, out_w, out_h)
        )

    def test_output_within_input_range(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            img = rng.integers(40, 200, size=(11, 9), dtype=np.uint8)
            out = resize_bilinear(img, 27, 31)
            assert out.min() >= img.min()
            assert out.max() <= img.max()

    def test_zero_target_rejected(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(ValueError, match="at least 1x1"):
            resize_bilinear(img, 0, 4)
        with pytest.raises(ValueError):
            resize_bilinear(img, 4, 0)


# ----------------------------------------------------------------------
# histogram equalization


def oracle_cdf_map(img):
    """Direct CDF computation: level -> floor(255 * cdf / N + 0.5)."""
    counts = {}
    for v in img.ravel().tolist():
        counts[v] = counts.get(v, 0) + 1
    cumulative = 0
    mapping = {}
    for level in range(256):
        cumulative += counts.get(level, 0)
        mapping[level] = math.floor(255.0 * cumulative / img.size + 0.5)
    return mapping


class TestEqualizeHistogram:
    def test_constant_image_unchanged(self):
        img = np.full((8, 8), 42, dtype=np.uint8)
        np.testing.assert_array_equal(equalize_histogram(img), img)

    def test_uniform_histogram_within_one_level(self):
        # Every level appears exactly twice: the CDF is (v + 1)/256, so the
        # mapping is v * 255/256 + 255/256, within 1 level of the identity.
        img = np.repeat(np.arange(256, dtype=np.uint8), 2).reshape(32, 16)
        out = equalize_histogram(img)
        assert np.max(np.abs(out.astype(int) - img.astype(int))) <= 1

    def test_two_level_image_hand_oracle(self):
        # cdf(0) = 1/2 -> floor(127.5 + 0.5) = 128; cdf(255) = 1 -> 255.
        img = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        out = equalize_histogram(img)
        assert set(np.unique(out)) == {128, 255}
        assert np.all((img == 0) == (out == 128))

    def test_matches_direct_cdf_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            img = random_image(rng, 13, 11)
            mapping = oracle_cdf_map(img)
            out = equalize_histogram(img)
            for y in range(img.shape[0]):
                for x in range(img.shape[1]):
                    assert out[y, x] == mapping[int(img[y, x])]

    def test_idempotent_within_one_level(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            img = random_image(rng, 20, 15)
            once = equalize_histogram(img)
            twice = equalize_histogram(once)
            assert np.max(np.abs(twice.astype(int) - once.astype(int))) <= 1

    def test_monotone_in_input_level(self):
        rng = np.random.default_rng(9)
        img = random_image(rng, 30, 30)
        out = equalize_histogram(img)
        levels = sorted(set(img.ravel().tolist()))
        mapped = []
        for level in levels:
            values = set(out[img == level].ravel().tolist())
            assert len(values) == 1  # one output level per input level
            mapped.append(values.pop())
        assert mapped == sorted(mapped)


# ----------------------------------------------------------------------
# I/O and metadata


class TestPgmAndBoxes:
    def test_pgm_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        img = random_image(rng, 37, 21)
        path = tmp_path / "img.pgm"
        write_pgm(path, img)
        np.testing.assert_array_equal(read_pgm(path), img)

    def test_pgm_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
        with pytest.raises(ValueError, match="P5"):
            read_pgm(path)

    def test_pgm_rejects_truncation(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4 4\n255\n\x00\x01")
        with pytest.raises(ValueError, match="truncated"):
            read_pgm(path)

    def test_pgm_reads_comments(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 1\n255\n\x05\x09")
        np.testing.assert_array_equal(read_pgm(path), [[5, 9]])

    def test_boxes_round_trip(self, tmp_path):
        boxes = {
            ("s000_frontal0", BodyPart.FACE): (10, 5, 70, 90),
            ("s000_frontal0", BodyPart.TORSO): (4, 80, 120, 170),
        }
        path = tmp_path / "boxes.txt"
        write_boxes(path, boxes)
        assert read_boxes(path) == boxes

    def test_boxes_reject_malformed_line(self, tmp_path):
        path = tmp_path / "boxes.txt"
        path.write_text("sample face 1 2 3\n")
        with pytest.raises(ValueError, match="expected"):
            read_boxes(path)

    def test_nominal_crops(self):
        assert BodyPart.FACE.nominal_crop == (70, 90)
        assert BodyPart.TORSO.nominal_crop == (120, 170)
        assert BodyPart.WHOLEBODY.nominal_crop == (250, 450)
