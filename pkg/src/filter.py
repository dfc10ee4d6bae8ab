"""Bayes recursion: the generic discrete filter and the DBF tracking step.

The generic filter alternates

    predict:  p(s_t | z_1:t-1) = sum_{s_t-1} p(s_t | s_t-1) p(s_t-1 | z_1:t-1)
    update:   p(s_t | z_1:t)   = p(z_t | s_t) p(s_t | z_1:t-1) / Z_t

over an explicit state list. The DBF step specializes it to Monte-Carlo
displacement candidates: independent Brownian increments collapse the
prediction to the fixed prior, which is fused with the weighted-softmax
likelihood, and the posterior argmax becomes the new box.
"""

import logging
import math
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import msgspec
import numpy as np

from .errors import (
    DegenerateBeliefError,
    EmptyInputError,
    LengthMismatchError,
    TotalConflictError,
)
from .geometry import as_offsets, realize_boxes
from .models import (
    BoundingBox,
    CandidateSet,
    ConfidenceSource,
    DiscreteBelief,
    Displacement,
    FilterConfig,
    Frame,
    ResultRecord,
    SystemModelParams,
    TrackState,
)
from .observation import Scorer, maybe_update_template, penalty_weights, weighted_softmax
from .system_model import prior_density_array, sample_candidates

logger = logging.getLogger(__name__)

Transition = Union[Callable[[Any, Any], float], np.ndarray]


class MapEstimate(msgspec.Struct, frozen=True):
    """Posterior argmax: its index, state and weight."""

    index: int
    state: Any
    weight: float


def _normalize(weights: np.ndarray, what: str) -> np.ndarray:
    total = float(np.sum(weights))
    if not total > 0 or not math.isfinite(total):
        raise DegenerateBeliefError(f"{what} has total mass {total}")
    return weights / total


def _transition_matrix(states: Sequence[Any], transition: Transition) -> np.ndarray:
    if isinstance(transition, np.ndarray):
        matrix = np.asarray(transition, dtype=float)
        if matrix.shape != (len(states), len(states)):
            raise LengthMismatchError(
                f"transition matrix {matrix.shape} does not match {len(states)} states"
            )
        return matrix
    return np.array([[transition(a, b) for b in states] for a in states], dtype=float)


def predict(belief: DiscreteBelief, transition: Transition) -> DiscreteBelief:
    """Propagate a belief through the system model.

    Args:
        belief: Posterior of the previous frame
        transition: Either a callable ``(prev_state, cur_state) -> density`` or a
            matrix whose entry [i, j] is the density of moving from state i to j

    Returns:
        The normalized predicted belief over the same states
    """
    matrix = _transition_matrix(belief.states, transition)
    if np.any(matrix < 0):
        raise ValueError("transition densities must be non-negative")
    weights = _normalize(belief.weights @ matrix, "predicted belief")
    return DiscreteBelief(states=belief.states, weights=weights)


def update(predicted: DiscreteBelief, likelihood: Sequence[float]) -> DiscreteBelief:
    """Bayes update with the observation likelihood, normalized by Z_t.

    Raises:
        TotalConflictError: if Z_t is zero
    """
    lik = np.asarray(likelihood, dtype=float)
    if lik.shape != predicted.weights.shape:
        raise LengthMismatchError(f"{lik.size} likelihoods vs {predicted.weights.size} states")
    if np.any(lik < 0):
        raise ValueError("likelihood values must be non-negative")
    joint = lik * predicted.weights
    z = float(np.sum(joint))
    if not z > 0:
        raise TotalConflictError("likelihood has no support under the predicted belief")
    return DiscreteBelief(states=predicted.states, weights=joint / z)


def _magnitude(state: Any) -> float:
    return state.magnitude if isinstance(state, Displacement) else 0.0


def map_estimate(belief: DiscreteBelief) -> MapEstimate:
    """Most probable state; ties go to the smallest displacement, then the lowest index."""
    weights = belief.weights
    best = float(np.max(weights))
    tied = np.flatnonzero(np.isclose(weights, best, rtol=1e-12, atol=0.0))
    index = int(min(tied, key=lambda i: (_magnitude(belief.states[i]), i)))
    return MapEstimate(index=index, state=belief.states[index], weight=float(weights[index]))


class _Snapshot(msgspec.Struct):
    frame: int
    weights: List[float]


class DiscreteBayesFilter:
    """Stateful recursion over a fixed, finite state list.

    The first observation updates the initial prior directly; every later
    observation is preceded by a prediction step.
    """

    def __init__(self, states: Sequence[Any], prior: Sequence[float], transition: Transition) -> None:
        self.states = list(states)
        self.matrix = _transition_matrix(self.states, transition)
        self.belief = DiscreteBelief(
            states=self.states, weights=_normalize(np.asarray(prior, dtype=float), "prior")
        )
        self.frame = 0

    def step(self, likelihood: Sequence[float]) -> DiscreteBelief:
        predicted = self.belief if self.frame == 0 else predict(self.belief, self.matrix)
        self.belief = update(predicted, likelihood)
        self.frame += 1
        return self.belief

    def run(self, likelihoods: Sequence[Sequence[float]]) -> List[DiscreteBelief]:
        return [self.step(lik) for lik in likelihoods]

    def snapshot(self) -> bytes:
        """Serialize the recursion state (frame count and posterior) losslessly."""
        return msgspec.msgpack.encode(_Snapshot(frame=self.frame, weights=self.belief.weights.tolist()))

    def restore(self, blob: bytes) -> None:
        snap = msgspec.msgpack.decode(blob, type=_Snapshot)
        self.belief = DiscreteBelief(states=self.states, weights=np.array(snap.weights, dtype=float))
        self.frame = snap.frame


def _ordered_scales(scales: Sequence[float]) -> List[float]:
    # identity scale first so candidate 0 is the unchanged box
    return sorted(set(scales), key=lambda s: (abs(math.log(s)), s))


def _draw_displacements(sys: SystemModelParams, cfg: FilterConfig, frame_index: int) -> List[Displacement]:
    zero = Displacement(dx=0.0, dy=0.0)
    if cfg.n_candidates == 1:
        return [zero]
    return [zero] + sample_candidates(sys, cfg.n_candidates - 1, rng_seed=[cfg.seed, frame_index])


def init_track(frame: Frame, init_box: BoundingBox, scorer: Scorer) -> TrackState:
    """Start a track at ``init_box`` in the first frame and prime the scorer."""
    scorer.initialize(frame, init_box)
    record = ResultRecord(frame_index=1, box=init_box, map_weight=1.0, fallback=False)
    return TrackState(frame_index=1, current_box=init_box, history=[record])


def dbf_step(
    track: TrackState,
    frame: Frame,
    scorer: Scorer,
    sys: SystemModelParams,
    cfg: FilterConfig,
) -> Tuple[TrackState, CandidateSet]:
    """Advance the track by one frame.

    Candidates are the zero displacement plus ``n_candidates - 1`` prior
    samples, each realized at every scale. The posterior is the normalized
    prior times the weighted-softmax likelihood; its argmax becomes the new
    box. If prior and likelihood conflict, the previous box is kept and the
    record is flagged as a fallback.

    Args:
        track: State after the previous frame
        frame: The new frame
        scorer: Observation model, frozen during the step
        sys: Prior over displacements
        cfg: Candidate, penalty and update settings

    Returns:
        The advanced track and every per-candidate quantity of this step
    """
    frame_index = track.frame_index + 1
    prev = track.current_box
    base = _draw_displacements(sys, cfg, frame_index)
    scales = _ordered_scales(cfg.scales)
    displacements = [d for d in base for _ in scales]
    offsets = as_offsets(displacements)
    scale_arr = np.tile(np.asarray(scales, dtype=float), len(base))
    boxes = realize_boxes(prev, offsets, scale_arr, cfg.encoding)

    prior = prior_density_array(sys, offsets)
    scorer.prepare(frame_index)
    response = np.clip(scorer.score_many(frame, boxes), 0.0, 1.0)
    if cfg.observation_only:
        alpha = np.ones(len(offsets))
        predicted_weights = np.full(len(offsets), 1.0 / len(offsets))
    else:
        alpha = penalty_weights(offsets, cfg.sigma_alpha)
        predicted_weights = prior
    likelihood = weighted_softmax(response, alpha)

    fallback = False
    try:
        predicted = DiscreteBelief(states=displacements, weights=_normalize(predicted_weights, "prior"))
        belief = update(predicted, likelihood)
        best: Optional[MapEstimate] = map_estimate(belief)
        posterior = belief.weights
    except (TotalConflictError, DegenerateBeliefError) as e:
        logger.warning(f"Frame {frame_index}: {e}; keeping previous box")
        fallback = True
        best = None
        try:
            posterior = _normalize(predicted_weights, "prior")
        except DegenerateBeliefError:
            posterior = np.full(len(offsets), 1.0 / len(offsets))

    if best is None:
        new_box, weight = prev, float(posterior[0])
    else:
        new_box, weight = BoundingBox.from_array(boxes[best.index]), best.weight
        confidence = weight if cfg.confidence_source is ConfidenceSource.POSTERIOR else float(response[best.index])
        maybe_update_template(scorer, frame, new_box, confidence, frame_index, cfg.update_policy)

    logger.debug(f"Frame {frame_index}: box={new_box.as_tuple()} weight={weight:.4g}")
    record = ResultRecord(frame_index=frame_index, box=new_box, map_weight=weight, fallback=fallback)
    candidates = CandidateSet(
        displacements=displacements,
        boxes=boxes,
        scales=scale_arr,
        prior=prior,
        response=response,
        alpha=alpha,
        likelihood=likelihood,
        posterior=posterior,
    )
    new_track = TrackState(frame_index=frame_index, current_box=new_box, history=[*track.history, record])
    return new_track, candidates


def run_tracker(
    frames: Sequence[Frame],
    init_box: BoundingBox,
    scorer: Scorer,
    sys: SystemModelParams,
    cfg: FilterConfig,
) -> TrackState:
    """Track through every frame and return the final state with its full history."""
    if not frames:
        raise EmptyInputError("cannot track an empty sequence")
    track = init_track(frames[0], init_box, scorer)
    for frame in frames[1:]:
        track, _ = dbf_step(track, frame, scorer, sys, cfg)
    fallbacks = sum(r.fallback for r in track.history)
    if fallbacks:
        logger.warning(f"{fallbacks} of {len(frames)} frames fell back to the previous box")
    return track


def track_sequence(
    frames: Sequence[Frame],
    init_box: BoundingBox,
    scorer: Scorer,
    sys: SystemModelParams,
    cfg: FilterConfig,
) -> List[BoundingBox]:
    """One box per frame; the first is ``init_box``."""
    return [r.box for r in run_tracker(frames, init_box, scorer, sys, cfg).history]
