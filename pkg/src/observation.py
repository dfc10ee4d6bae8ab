"""Observation model: candidate scoring and the weighted-softmax likelihood.

A scorer maps a candidate region to a foreground probability v1. Scores are
turned into the likelihood p(z_t | s_t^i) = exp(a_i v_i) / sum_j exp(a_j v_j),
where the penalty a_i decays with the candidate's distance from the previous
center. Scorers are pluggable; NCCScorer is a classical template matcher and
OracleScorer scores against known ground truth.
"""

import abc
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage, special

from .errors import DegeneratePatchError, EmptyInputError, LengthMismatchError, OutOfBoundsError
from .geometry import as_offsets, boxes_to_array
from .metrics import overlap_ratio, overlap_ratios
from .models import (
    BoundingBox,
    Displacement,
    Frame,
    ResponseScore,
    TemplateUpdatePolicy,
    UpdateMode,
)

logger = logging.getLogger(__name__)

_FLAT_EPS = 1e-12

TemplateSize = Tuple[int, int]  # (width, height)


def penalty_weights(
    candidates: Union[Sequence[Displacement], np.ndarray], sigma_alpha: float = 0.5
) -> np.ndarray:
    """Gaussian penalty exp(-r^2 / (2 sigma^2)) on each candidate's displacement radius.

    Args:
        candidates: Displacements, or an (n, 2) array of them
        sigma_alpha: Width of the penalty in relative units

    Returns:
        Weights in (0, 1], equal to 1 for the zero displacement
    """
    offsets = as_offsets(candidates)
    if len(offsets) == 0:
        raise EmptyInputError("penalty weights need at least one candidate")
    if not sigma_alpha > 0:
        raise ValueError(f"sigma_alpha must be positive, got {sigma_alpha}")
    r2 = offsets[:, 0] ** 2 + offsets[:, 1] ** 2
    return np.exp(-r2 / (2.0 * sigma_alpha**2))


def weighted_softmax(scores: Sequence[float], alpha: Sequence[float]) -> np.ndarray:
    """Likelihood vector exp(alpha_i v_i) / sum_j exp(alpha_j v_j).

    Scores are clamped to [0, 1] first.
    """
    v = np.clip(np.asarray(scores, dtype=float), 0.0, 1.0)
    a = np.asarray(alpha, dtype=float)
    if v.shape != a.shape:
        raise LengthMismatchError(f"{v.size} scores vs {a.size} penalty weights")
    if v.size == 0:
        raise EmptyInputError("weighted softmax needs at least one score")
    return special.softmax(a * v)


def _outside(frame: Frame, boxes: np.ndarray) -> np.ndarray:
    return (
        (boxes[:, 0] >= frame.width)
        | (boxes[:, 0] + boxes[:, 2] <= 0)
        | (boxes[:, 1] >= frame.height)
        | (boxes[:, 1] + boxes[:, 3] <= 0)
    )


def crop_patches(frame: Frame, boxes: np.ndarray, size: TemplateSize) -> np.ndarray:
    """Bilinearly resample each box region to ``size``.

    Pixel (r, c) covers [c, c+1) x [r, r+1); samples are taken at the centers
    of a ``size`` grid laid over each box. Out-of-frame samples repeat the
    nearest edge pixel.

    Returns:
        (n, height, width) array of patches
    """
    tw, th = size
    fx = (np.arange(tw) + 0.5) / tw
    fy = (np.arange(th) + 0.5) / th
    cols = boxes[:, 0, None] + fx[None, :] * boxes[:, 2, None] - 0.5  # (n, tw)
    rows = boxes[:, 1, None] + fy[None, :] * boxes[:, 3, None] - 0.5  # (n, th)
    n = len(boxes)
    grid_rows = np.broadcast_to(rows[:, :, None], (n, th, tw))
    grid_cols = np.broadcast_to(cols[:, None, :], (n, th, tw))
    coords = np.stack([grid_rows, grid_cols])
    return ndimage.map_coordinates(frame.pixels, coords, order=1, mode="nearest")


def crop_patch(frame: Frame, box: BoundingBox, size: TemplateSize) -> np.ndarray:
    """Resample one box region; raises if the box misses the frame entirely."""
    boxes = boxes_to_array([box])
    if _outside(frame, boxes)[0]:
        raise OutOfBoundsError(f"box {box.as_tuple()} lies outside the {frame.width}x{frame.height} frame")
    return crop_patches(frame, boxes, size)[0]


def _zncc_many(template: np.ndarray, patches: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Zero-normalized cross-correlation of each patch with the template.

    Returns:
        (rho, degenerate) where degenerate marks constant patches (rho set to 0)
    """
    t = template - template.mean()
    t_norm = np.sqrt(np.sum(t * t))
    p = patches - patches.mean(axis=(1, 2), keepdims=True)
    p_norm = np.sqrt(np.sum(p * p, axis=(1, 2)))
    degenerate = p_norm <= _FLAT_EPS * max(1.0, float(np.sqrt(t.size)))
    safe = np.where(degenerate, 1.0, p_norm)
    rho = np.einsum("nij,ij->n", p, t) / (safe * t_norm)
    rho = np.where(degenerate, 0.0, np.clip(rho, -1.0, 1.0))
    return rho, degenerate


def _check_template(template: np.ndarray) -> None:
    if float(np.std(template)) <= _FLAT_EPS:
        raise DegeneratePatchError("template has zero intensity variance")


def ncc_score(template: np.ndarray, frame: Frame, box: BoundingBox) -> ResponseScore:
    """Score a box by ZNCC against a template: v1 = (rho + 1) / 2.

    A constant crop yields v1 = 0.5 flagged as degenerate.
    """
    _check_template(template)
    th, tw = template.shape
    patch = crop_patch(frame, box, (tw, th))
    rho, degenerate = _zncc_many(template, patch[None])
    if degenerate[0]:
        logger.warning(f"Constant patch at {box.as_tuple()}; returning neutral score")
        return ResponseScore(v1=0.5, v2=0.5, degenerate=True)
    return ResponseScore.from_foreground((float(rho[0]) + 1.0) / 2.0)


def oracle_score(truth: BoundingBox, box: BoundingBox) -> ResponseScore:
    """Perfect classifier: v1 is the overlap ratio with the true box."""
    return ResponseScore.from_foreground(overlap_ratio(box, truth))


class Scorer(abc.ABC):
    """Maps candidate regions of a frame to foreground probabilities.

    Scoring is read-only with respect to the template; ``update_template`` is
    the only mutation and must not run concurrently with scoring.
    """

    def initialize(self, frame: Frame, box: BoundingBox) -> None:
        """Learn from the first frame; default does nothing."""

    def prepare(self, frame_index: int) -> None:
        """Called before scoring frame ``frame_index`` (1-based)."""

    @abc.abstractmethod
    def score(self, frame: Frame, box: BoundingBox) -> ResponseScore:
        """Score a single candidate box."""

    def score_many(self, frame: Frame, boxes: np.ndarray) -> np.ndarray:
        """Foreground scores v1 for an (n, 4) box array; boxes off the frame score 0."""
        outside = _outside(frame, boxes)
        return np.array(
            [0.0 if out else self.score(frame, BoundingBox.from_array(b)).v1 for b, out in zip(boxes, outside)]
        )

    @abc.abstractmethod
    def update_template(self, frame: Frame, box: BoundingBox, rate: float = 1.0) -> bool:
        """Blend the appearance at ``box`` into the template with weight ``rate``; True if it changed."""


class NCCScorer(Scorer):
    """Template matcher using zero-normalized cross-correlation."""

    def __init__(self, template_size: TemplateSize = (32, 32)) -> None:
        self.template_size = template_size
        self.template: Optional[np.ndarray] = None

    def _template(self) -> np.ndarray:
        if self.template is None:
            raise RuntimeError("NCCScorer used before initialize()")
        return self.template

    def initialize(self, frame: Frame, box: BoundingBox) -> None:
        template = crop_patch(frame, box, self.template_size)
        _check_template(template)
        self.template = template

    def score(self, frame: Frame, box: BoundingBox) -> ResponseScore:
        return ncc_score(self._template(), frame, box)

    def score_many(self, frame: Frame, boxes: np.ndarray) -> np.ndarray:
        template = self._template()
        rho, degenerate = _zncc_many(template, crop_patches(frame, boxes, self.template_size))
        v1 = np.where(degenerate, 0.5, (rho + 1.0) / 2.0)
        return np.where(_outside(frame, boxes), 0.0, v1)

    def update_template(self, frame: Frame, box: BoundingBox, rate: float = 1.0) -> bool:
        new = crop_patch(frame, box, self.template_size)
        blended = (1.0 - rate) * self._template() + rate * new
        if float(np.std(blended)) <= _FLAT_EPS:
            logger.warning("Blended template would be constant; keeping the old one")
            return False
        self.template = blended
        return True


class OracleScorer(Scorer):
    """Scores candidates by overlap with the known true box of each frame."""

    def __init__(self, truth: Sequence[BoundingBox]) -> None:
        if not truth:
            raise EmptyInputError("oracle scorer needs ground truth")
        self.truth = list(truth)
        self._current = self.truth[0]

    def prepare(self, frame_index: int) -> None:
        self._current = self.truth[frame_index - 1]

    def score(self, frame: Frame, box: BoundingBox) -> ResponseScore:
        return oracle_score(self._current, box)

    def score_many(self, frame: Frame, boxes: np.ndarray) -> np.ndarray:
        truth = boxes_to_array([self._current])
        return overlap_ratios(boxes, np.broadcast_to(truth, boxes.shape))

    def update_template(self, frame: Frame, box: BoundingBox, rate: float = 1.0) -> bool:
        return False


def maybe_update_template(
    scorer: Scorer,
    frame: Frame,
    estimate: BoundingBox,
    confidence: float,
    frame_index: int,
    policy: TemplateUpdatePolicy,
) -> bool:
    """Refresh the scorer's template when the policy's cadence and confidence gates pass.

    Args:
        scorer: Scorer whose template may be blended
        frame: Current frame
        estimate: Tracked box in ``frame``
        confidence: Confidence of the estimate, compared against ``policy.threshold``
        frame_index: 1-based index of ``frame``
        policy: Update cadence, gate and blend rate

    Returns:
        True if the template was updated
    """
    if policy.mode is UpdateMode.NEVER:
        return False
    if policy.mode is UpdateMode.INTERVAL and frame_index % policy.interval != 0:
        return False
    if confidence < policy.threshold:
        logger.debug(f"Frame {frame_index}: confidence {confidence:.3f} below gate, template kept")
        return False
    if _outside(frame, boxes_to_array([estimate]))[0]:
        logger.warning(f"Frame {frame_index}: estimate left the frame, template kept")
        return False
    updated = scorer.update_template(frame, estimate, rate=policy.rate)
    if updated:
        logger.debug(f"Frame {frame_index}: template updated")
    return updated
