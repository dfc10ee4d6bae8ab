"""Tests for box geometry and displacement encodings."""

import numpy as np
import pytest

from src.geometry import (
    apply_displacement,
    as_offsets,
    boxes_to_array,
    center,
    centers_of,
    displacement,
    displacement_avg_norm,
    displacement_prev_norm,
    realize_boxes,
)
from src.models import BoundingBox, Displacement, Encoding


def test_center() -> None:
    c = center(BoundingBox(x=10.0, y=20.0, w=4.0, h=6.0))
    assert (c.cx, c.cy) == (12.0, 23.0)


def test_prev_norm_example() -> None:
    """A 10 px shift of a 20 px box along x is a displacement of 0.5."""
    d = displacement_prev_norm(BoundingBox(0.0, 0.0, 20.0, 20.0), BoundingBox(10.0, 0.0, 20.0, 20.0))
    assert d == Displacement(dx=0.5, dy=0.0)


def test_avg_norm_example() -> None:
    prev = BoundingBox(0.0, 0.0, 10.0, 10.0)
    cur = BoundingBox(0.0, 0.0, 30.0, 10.0)
    # centers 5 -> 15 along x, mean width 20
    d = displacement_avg_norm(prev, cur)
    assert d.dx == pytest.approx(0.5)
    assert d.dy == 0.0


def test_displacement_dispatch() -> None:
    prev = BoundingBox(0.0, 0.0, 10.0, 10.0)
    cur = BoundingBox(2.0, 0.0, 30.0, 10.0)
    assert displacement(prev, cur, Encoding.PREV) == displacement_prev_norm(prev, cur)
    assert displacement(prev, cur, Encoding.AVG) == displacement_avg_norm(prev, cur)


def test_identical_boxes_give_zero() -> None:
    box = BoundingBox(3.0, 4.0, 5.0, 6.0)
    assert displacement_prev_norm(box, box) == Displacement(0.0, 0.0)
    assert displacement_avg_norm(box, box) == Displacement(0.0, 0.0)


class TestRoundTrip:
    """apply_displacement inverts the encodings."""

    def test_prev_round_trip_random(self) -> None:
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            x, y = rng.uniform(-100, 100, size=2)
            w, h = rng.uniform(1, 100, size=2)
            prev = BoundingBox(float(x), float(y), float(w), float(h))
            d = Displacement(*(float(v) for v in rng.normal(0, 0.5, size=2)))
            back = displacement_prev_norm(prev, apply_displacement(prev, d))
            assert back.dx == pytest.approx(d.dx, abs=1e-9)
            assert back.dy == pytest.approx(d.dy, abs=1e-9)

    @pytest.mark.parametrize("scale", [0.97, 1.0, 1.03, 2.0])
    def test_avg_round_trip_with_scale(self, scale: float) -> None:
        prev = BoundingBox(5.0, 7.0, 20.0, 12.0)
        d = Displacement(dx=0.3, dy=-0.2)
        moved = apply_displacement(prev, d, scale, Encoding.AVG)
        back = displacement_avg_norm(prev, moved)
        assert back.dx == pytest.approx(d.dx, abs=1e-12)
        assert back.dy == pytest.approx(d.dy, abs=1e-12)
        assert moved.w == pytest.approx(prev.w * scale)


def test_translation_invariance() -> None:
    """Shifting both boxes by the same offset leaves the displacement unchanged."""
    prev = BoundingBox(3.0, 4.0, 10.0, 8.0)
    cur = BoundingBox(6.0, 2.0, 11.0, 9.0)
    shifted_prev = BoundingBox(prev.x + 17.0, prev.y - 5.0, prev.w, prev.h)
    shifted_cur = BoundingBox(cur.x + 17.0, cur.y - 5.0, cur.w, cur.h)
    for encoding in Encoding:
        a = displacement(prev, cur, encoding)
        b = displacement(shifted_prev, shifted_cur, encoding)
        assert a.dx == pytest.approx(b.dx, abs=1e-12)
        assert a.dy == pytest.approx(b.dy, abs=1e-12)


def test_scale_covariance() -> None:
    """Scaling the whole scene leaves the relative displacement unchanged."""
    prev = BoundingBox(3.0, 4.0, 10.0, 8.0)
    cur = BoundingBox(6.0, 2.0, 11.0, 9.0)
    k = 3.5
    scaled_prev = BoundingBox(*(v * k for v in prev.as_tuple()))
    scaled_cur = BoundingBox(*(v * k for v in cur.as_tuple()))
    for encoding in Encoding:
        a = displacement(prev, cur, encoding)
        b = displacement(scaled_prev, scaled_cur, encoding)
        assert a.dx == pytest.approx(b.dx, abs=1e-12)
        assert a.dy == pytest.approx(b.dy, abs=1e-12)


@pytest.mark.parametrize("encoding", list(Encoding))
def test_realize_boxes_matches_scalar(encoding: Encoding) -> None:
    prev = BoundingBox(10.0, 20.0, 16.0, 24.0)
    offsets = np.array([[0.0, 0.0], [0.25, -0.5], [-1.0, 0.1]])
    scales = np.array([1.0, 0.97, 1.03])
    boxes = realize_boxes(prev, offsets, scales, encoding)
    assert boxes.shape == (3, 4)
    for row, (dx, dy), s in zip(boxes, offsets, scales):
        expected = apply_displacement(prev, Displacement(dx, dy), float(s), encoding)
        np.testing.assert_allclose(row, expected.as_tuple(), rtol=0, atol=1e-12)


def test_array_helpers() -> None:
    boxes = [BoundingBox(0.0, 0.0, 2.0, 4.0), BoundingBox(1.0, 1.0, 2.0, 2.0)]
    arr = boxes_to_array(boxes)
    np.testing.assert_array_equal(centers_of(arr), [[1.0, 2.0], [2.0, 2.0]])
    assert as_offsets([Displacement(1.0, 2.0)]).shape == (1, 2)
    assert as_offsets(np.zeros(4)).shape == (2, 2)
