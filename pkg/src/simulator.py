"""Seeded synthetic sequences: a Gaussian blob on a Brownian path plus ground truth.

Optional distractor blobs, intensity drift, blur and sensor noise imitate
background clutter, thermal crossover and motion blur. Everything is drawn
from one Philox generator seeded by the scenario, so a seed reproduces a
sequence bit for bit.
"""

import logging
import math
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from .errors import ScenarioConfigError
from .geometry import apply_displacement, center
from .models import BoundingBox, Displacement, Frame, ScenarioConfig, SyntheticSequence
from .system_model import make_rng, sample_increments

logger = logging.getLogger(__name__)

BACKGROUND = 0.1
PEAK = 0.9
DISTRACTOR_MIN_SEPARATION = 2.0  # in blob widths
_PLACEMENT_ATTEMPTS = 1000


def _validate(cfg: ScenarioConfig) -> None:
    width, height = cfg.frame_size
    bw, bh = cfg.blob_size
    if cfg.n_frames < 1:
        raise ScenarioConfigError(f"n_frames must be >= 1, got {cfg.n_frames}")
    if width < 1 or height < 1:
        raise ScenarioConfigError(f"frame size must be positive, got {cfg.frame_size}")
    if not (0 < bw <= width and 0 < bh <= height):
        raise ScenarioConfigError(f"blob {cfg.blob_size} does not fit in frame {cfg.frame_size}")
    if cfg.distractors < 0:
        raise ScenarioConfigError("distractor count must be non-negative")
    if cfg.seed < 0:
        raise ScenarioConfigError(f"seed must be non-negative, got {cfg.seed}")
    for name in ("blur_radius", "noise_std", "scale_std"):
        value = getattr(cfg, name)
        if not (math.isfinite(value) and value >= 0):
            raise ScenarioConfigError(f"{name} must be finite and non-negative, got {value}")
    if not math.isfinite(cfg.intensity_drift):
        raise ScenarioConfigError("intensity_drift must be finite")


def _reflect_step(
    prev: BoundingBox, d: np.ndarray, scale: float, frame_size: Tuple[int, int]
) -> BoundingBox:
    """Apply an increment, mirroring any axis that would leave the frame."""
    width, height = frame_size
    moved = apply_displacement(prev, Displacement(dx=float(d[0]), dy=float(d[1])), scale)
    dx, dy = float(d[0]), float(d[1])
    if moved.x < 0 or moved.x + moved.w > width:
        dx = -dx
    if moved.y < 0 or moved.y + moved.h > height:
        dy = -dy
    moved = apply_displacement(prev, Displacement(dx=dx, dy=dy), scale)
    # a mirrored step can still overshoot on tiny frames; clamp as a last resort
    w, h = min(moved.w, width), min(moved.h, height)
    x = min(max(moved.x, 0.0), width - w)
    y = min(max(moved.y, 0.0), height - h)
    return BoundingBox(x=x, y=y, w=w, h=h)


def _initial_box(cfg: ScenarioConfig) -> BoundingBox:
    width, height = cfg.frame_size
    bw, bh = cfg.blob_size
    return BoundingBox(x=(width - bw) / 2, y=(height - bh) / 2, w=bw, h=bh)


def _place_distractor(cfg: ScenarioConfig, target: BoundingBox, rng: np.random.Generator) -> BoundingBox:
    width, height = cfg.frame_size
    bw, bh = target.w, target.h
    c = center(target)
    min_dist = DISTRACTOR_MIN_SEPARATION * bw
    for _ in range(_PLACEMENT_ATTEMPTS):
        x = rng.uniform(0.0, width - bw)
        y = rng.uniform(0.0, height - bh)
        box = BoundingBox(x=x, y=y, w=bw, h=bh)
        if math.hypot(x + bw / 2 - c.cx, y + bh / 2 - c.cy) >= min_dist:
            return box
    raise ScenarioConfigError(
        f"cannot place a distractor {min_dist:.1f} px from the target in a {width}x{height} frame"
    )


def _trajectory(cfg: ScenarioConfig, start: BoundingBox, rng: np.random.Generator) -> List[BoundingBox]:
    boxes = [start]
    if cfg.n_frames == 1:
        return boxes
    steps = sample_increments(cfg.motion, cfg.n_frames - 1, rng)
    if cfg.scale_std > 0:
        scales = np.exp(rng.normal(0.0, cfg.scale_std, size=cfg.n_frames - 1))
    else:
        scales = np.ones(cfg.n_frames - 1)
    for d, s in zip(steps, scales):
        boxes.append(_reflect_step(boxes[-1], d, float(s), cfg.frame_size))
    return boxes


def render_blobs(frame_size: Tuple[int, int], boxes: List[BoundingBox]) -> np.ndarray:
    """Background with one Gaussian blob per box (sigma = size / 4), combined by maximum."""
    width, height = frame_size
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    image = np.full((height, width), BACKGROUND)
    for box in boxes:
        c = center(box)
        gx = np.exp(-0.5 * ((xs - c.cx) / (box.w / 4)) ** 2)
        gy = np.exp(-0.5 * ((ys - c.cy) / (box.h / 4)) ** 2)
        image = np.maximum(image, BACKGROUND + (PEAK - BACKGROUND) * np.outer(gy, gx))
    return image


def _truth_and_rng(cfg: ScenarioConfig) -> Tuple[List[BoundingBox], np.random.Generator]:
    _validate(cfg)
    rng = make_rng(cfg.seed)
    return _trajectory(cfg, _initial_box(cfg), rng), rng


def simulate_truth(cfg: ScenarioConfig) -> List[BoundingBox]:
    """Target trajectory only, identical to ``generate(cfg).truth`` without rendering."""
    truth, _ = _truth_and_rng(cfg)
    return truth


def generate(cfg: ScenarioConfig) -> SyntheticSequence:
    """Render a synthetic sequence with exact ground truth.

    Args:
        cfg: Scenario settings, including the seed

    Returns:
        Frames and one truth box per frame

    Raises:
        ScenarioConfigError: if the blob does not fit or distractors cannot be placed
    """
    truth, rng = _truth_and_rng(cfg)
    start = truth[0]
    distractor_paths = [
        _trajectory(cfg, _place_distractor(cfg, start, rng), rng) for _ in range(cfg.distractors)
    ]

    frames = []
    for t in range(cfg.n_frames):
        image = render_blobs(cfg.frame_size, [truth[t]] + [path[t] for path in distractor_paths])
        image = image + t * cfg.intensity_drift
        if cfg.blur_radius > 0:
            image = ndimage.gaussian_filter(image, sigma=cfg.blur_radius, mode="nearest")
        if cfg.noise_std > 0:
            image = image + rng.normal(0.0, cfg.noise_std, size=image.shape)
        frames.append(Frame(pixels=np.clip(image, 0.0, 1.0)))

    logger.info(
        f"Generated {cfg.n_frames} frames of {cfg.frame_size[0]}x{cfg.frame_size[1]} "
        f"with {cfg.distractors} distractors (seed {cfg.seed})"
    )
    return SyntheticSequence(frames=frames, truth=truth)
