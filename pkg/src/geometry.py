"""Bounding-box arithmetic and the relative-displacement state encodings."""

from typing import Sequence, Tuple, Union

import numpy as np

from .models import BoundingBox, Center, Displacement, Encoding


def center(box: BoundingBox) -> Center:
    """Return the center (x + w/2, y + h/2) of a box."""
    return Center(cx=box.x + box.w / 2, cy=box.y + box.h / 2)


def displacement_prev_norm(prev: BoundingBox, cur: BoundingBox) -> Displacement:
    """Center change normalized by the previous box size."""
    c0, c1 = center(prev), center(cur)
    return Displacement(dx=(c1.cx - c0.cx) / prev.w, dy=(c1.cy - c0.cy) / prev.h)


def displacement_avg_norm(prev: BoundingBox, cur: BoundingBox) -> Displacement:
    """Center change normalized by the mean of the two box sizes."""
    c0, c1 = center(prev), center(cur)
    return Displacement(
        dx=(c1.cx - c0.cx) / (0.5 * (prev.w + cur.w)),
        dy=(c1.cy - c0.cy) / (0.5 * (prev.h + cur.h)),
    )


def displacement(prev: BoundingBox, cur: BoundingBox, encoding: Encoding = Encoding.PREV) -> Displacement:
    """Dispatch to the encoding selected by configuration."""
    if encoding is Encoding.AVG:
        return displacement_avg_norm(prev, cur)
    return displacement_prev_norm(prev, cur)


def apply_displacement(
    prev: BoundingBox,
    d: Displacement,
    scale: float = 1.0,
    encoding: Encoding = Encoding.PREV,
) -> BoundingBox:
    """Move ``prev`` by a relative displacement, optionally rescaling it.

    This is the inverse of the chosen encoding: for scale 1 and the prev
    encoding, ``displacement_prev_norm(prev, apply_displacement(prev, d)) == d``.

    Args:
        prev: Box in the previous frame
        d: Relative center change
        scale: Factor applied to both width and height
        encoding: Which size normalizes the shift

    Returns:
        The moved box
    """
    w, h = prev.w * scale, prev.h * scale
    ref_w, ref_h = _reference_size(prev.w, prev.h, w, h, encoding)
    c = center(prev)
    cx = c.cx + d.dx * ref_w
    cy = c.cy + d.dy * ref_h
    return BoundingBox(x=cx - w / 2, y=cy - h / 2, w=w, h=h)


def realize_boxes(
    prev: BoundingBox,
    offsets: np.ndarray,
    scales: np.ndarray,
    encoding: Encoding = Encoding.PREV,
) -> np.ndarray:
    """Vectorized ``apply_displacement`` for aligned offset/scale arrays.

    Args:
        prev: Box in the previous frame
        offsets: (n, 2) array of (dx, dy)
        scales: (n,) array of size factors

    Returns:
        (n, 4) array of boxes as rows x, y, w, h
    """
    w = prev.w * scales
    h = prev.h * scales
    ref_w, ref_h = _reference_size(prev.w, prev.h, w, h, encoding)
    c = center(prev)
    cx = c.cx + offsets[:, 0] * ref_w
    cy = c.cy + offsets[:, 1] * ref_h
    return np.column_stack([cx - w / 2, cy - h / 2, w, h])


_Size = Union[float, np.ndarray]


def _reference_size(
    prev_w: float, prev_h: float, w: _Size, h: _Size, encoding: Encoding
) -> Tuple[_Size, _Size]:
    if encoding is Encoding.AVG:
        return 0.5 * (prev_w + w), 0.5 * (prev_h + h)
    return prev_w, prev_h


def as_offsets(displacements: Union[Sequence[Displacement], np.ndarray]) -> np.ndarray:
    """Coerce displacements to an (n, 2) float array."""
    if isinstance(displacements, np.ndarray):
        return np.asarray(displacements, dtype=float).reshape(-1, 2)
    return np.array([(d.dx, d.dy) for d in displacements], dtype=float).reshape(-1, 2)


def boxes_to_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    """Stack boxes into an (n, 4) array."""
    return np.array([b.as_tuple() for b in boxes], dtype=float).reshape(-1, 4)


def centers_of(boxes: np.ndarray) -> np.ndarray:
    """Centers of an (n, 4) box array as an (n, 2) array."""
    return boxes[:, :2] + boxes[:, 2:] / 2
