"""Data models for tracking: boxes, displacements, frames, configs and reports."""

import enum
import math
from typing import Dict, List, Optional, Tuple

import msgspec
import numpy as np

from .errors import FrameFormatError, InvalidBoxError, LengthMismatchError


class MotionFamily(str, enum.Enum):
    """Distribution family of the Brownian increment kernel."""

    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"


class Encoding(str, enum.Enum):
    """How a center shift is normalized into a relative displacement."""

    PREV = "prev"  # denominators w_{t-1}, h_{t-1}
    AVG = "avg"  # denominators (w_{t-1} + w_t) / 2, (h_{t-1} + h_t) / 2


class BoundingBox(msgspec.Struct, frozen=True):
    """Axis-aligned target box in pixels; (x, y) is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise InvalidBoxError(f"box fields must be finite, got {self.as_tuple()}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidBoxError(f"box size must be positive, got w={self.w}, h={self.h}")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "BoundingBox":
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


class Center(msgspec.Struct, frozen=True):
    """Box center in pixels."""

    cx: float
    cy: float


class Displacement(msgspec.Struct, frozen=True):
    """Relative center change between consecutive frames (the system state)."""

    dx: float
    dy: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dx) and math.isfinite(self.dy)):
            raise ValueError(f"displacement must be finite, got ({self.dx}, {self.dy})")

    @property
    def magnitude(self) -> float:
        return math.hypot(self.dx, self.dy)


class SystemModelParams(msgspec.Struct, frozen=True):
    """Prior over displacements: kernel family and pixel-to-state coefficients."""

    family: MotionFamily = MotionFamily.GAUSSIAN
    lambda_x: float = 2.0
    lambda_y: float = 2.0
    standard_gaussian: bool = False

    def __post_init__(self) -> None:
        for name, value in (("lambda_x", self.lambda_x), ("lambda_y", self.lambda_y)):
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")


class Frame(msgspec.Struct, frozen=True):
    """Grayscale image with intensities in [0, 1], indexed pixels[row, col]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise FrameFormatError(f"frame must be a non-empty 2D grid, got shape {self.pixels.shape}")
        if not np.all(np.isfinite(self.pixels)):
            raise FrameFormatError("frame intensities must be finite")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise FrameFormatError("frame intensities must lie in [0, 1]")

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


class ResponseScore(msgspec.Struct, frozen=True):
    """Foreground/background probabilities for one candidate region."""

    v1: float
    v2: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.v1 <= 1.0 and 0.0 <= self.v2 <= 1.0):
            raise ValueError(f"response scores must lie in [0, 1], got ({self.v1}, {self.v2})")
        if abs(self.v1 + self.v2 - 1.0) > 1e-9:
            raise ValueError(f"v1 + v2 must equal 1, got {self.v1 + self.v2}")

    @classmethod
    def from_foreground(cls, v1: float, degenerate: bool = False) -> "ResponseScore":
        v1 = min(max(v1, 0.0), 1.0)
        return cls(v1=v1, v2=1.0 - v1, degenerate=degenerate)


class UpdateMode(str, enum.Enum):
    """When the scorer's template may be refreshed."""

    INTERVAL = "interval"  # every K frames
    NEVER = "never"  # keep the first-frame template
    ALWAYS = "always"  # every frame


class TemplateUpdatePolicy(msgspec.Struct, frozen=True):
    """Cadence K, confidence gate tau and blend rate eta of template updates."""

    mode: UpdateMode = UpdateMode.INTERVAL
    interval: int = 20
    threshold: float = 0.6
    rate: float = 0.25

    def __post_init__(self) -> None:
        if self.interval < 1:
            raise ValueError(f"update interval must be >= 1, got {self.interval}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"update rate must lie in [0, 1], got {self.rate}")


class ConfidenceSource(str, enum.Enum):
    """Which quantity gates template updates."""

    POSTERIOR = "posterior"  # MAP posterior weight
    RESPONSE = "response"  # MAP candidate's response score v1


class FilterConfig(msgspec.Struct, frozen=True):
    """Per-step settings of the DBF tracker."""

    n_candidates: int = 257  # 256 sampled plus the forced zero displacement
    scales: Tuple[float, ...] = (0.97, 1.0, 1.03)
    sigma_alpha: float = 0.5
    encoding: Encoding = Encoding.PREV
    observation_only: bool = False
    seed: int = 0
    update_policy: TemplateUpdatePolicy = msgspec.field(default_factory=TemplateUpdatePolicy)
    confidence_source: ConfidenceSource = ConfidenceSource.POSTERIOR

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ValueError(f"n_candidates must be >= 1, got {self.n_candidates}")
        if not self.scales or any(not (s > 0 and math.isfinite(s)) for s in self.scales):
            raise ValueError(f"scales must be positive and finite, got {self.scales}")
        if not self.sigma_alpha > 0:
            raise ValueError(f"sigma_alpha must be positive, got {self.sigma_alpha}")


class ResultRecord(msgspec.Struct, frozen=True):
    """One row of a results file."""

    frame_index: int
    box: BoundingBox
    map_weight: float
    fallback: bool = False


class TrackState(msgspec.Struct, frozen=True):
    """Running track: the latest box plus one record per processed frame."""

    frame_index: int
    current_box: BoundingBox
    history: List[ResultRecord]

    def __post_init__(self) -> None:
        if self.frame_index < 1:
            raise ValueError(f"frame_index must be >= 1, got {self.frame_index}")
        indices = [r.frame_index for r in self.history]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("history must be strictly increasing in frame_index")
        if self.history and self.history[-1].box != self.current_box:
            raise ValueError("current_box must equal the last history box")


class DiscreteBelief(msgspec.Struct, frozen=True):
    """Probability vector over an explicit list of states."""

    states: list
    weights: np.ndarray

    def __post_init__(self) -> None:
        if len(self.states) < 1 or len(self.states) != len(self.weights):
            raise LengthMismatchError(
                f"belief needs >= 1 state and one weight per state, "
                f"got {len(self.states)} states and {len(self.weights)} weights"
            )
        if np.any(self.weights < 0):
            raise ValueError("belief weights must be non-negative")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError(f"belief weights must sum to 1, got {float(np.sum(self.weights))}")


class CandidateSet(msgspec.Struct, frozen=True):
    """Every quantity the DBF step computes for its candidates, aligned by index."""

    displacements: List[Displacement]
    boxes: np.ndarray  # (n, 4) rows of x, y, w, h
    scales: np.ndarray
    prior: np.ndarray
    response: np.ndarray
    alpha: np.ndarray
    likelihood: np.ndarray
    posterior: np.ndarray

    def __len__(self) -> int:
        return len(self.displacements)

    def box(self, index: int) -> BoundingBox:
        return BoundingBox.from_array(self.boxes[index])


class EvalCurve(msgspec.Struct):
    """Metric value as a function of threshold."""

    thresholds: List[float]
    values: List[float]

    def __post_init__(self) -> None:
        if len(self.thresholds) != len(self.values):
            raise LengthMismatchError("curve thresholds and values differ in length")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("curve thresholds must be strictly ascending")


class SequenceMetrics(msgspec.Struct):
    """Summary numbers for one sequence (or an average over sequences)."""

    precision: float
    success_auc: float
    norm_precision_auc: float


class EvalReport(msgspec.Struct):
    """Evaluation of one results file against its ground truth."""

    name: str
    frames: int
    metrics: SequenceMetrics
    precision_curve: EvalCurve
    success_curve: EvalCurve
    norm_precision_curve: EvalCurve
    attributes: List[str] = msgspec.field(default_factory=list)


class DatasetReport(msgspec.Struct):
    """Equal-weight average over sequences, plus per-attribute averages."""

    sequences: List[EvalReport]
    overall: SequenceMetrics
    by_attribute: Dict[str, SequenceMetrics] = msgspec.field(default_factory=dict)


class Histogram(msgspec.Struct, frozen=True):
    """Density-normalized histogram: sum(densities * widths) == 1."""

    bin_edges: np.ndarray
    densities: np.ndarray

    def __post_init__(self) -> None:
        if len(self.bin_edges) != len(self.densities) + 1:
            raise LengthMismatchError("histogram needs exactly one more edge than bins")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("histogram edges must be strictly ascending")
        if np.any(self.densities < 0):
            raise ValueError("histogram densities must be non-negative")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)


class FitResult(msgspec.Struct, frozen=True):
    """Maximum-likelihood fit of one family plus its histogram R^2."""

    family: MotionFamily
    location: float
    scale: float
    r_squared: float

    @property
    def rate(self) -> float:
        """Reported lambda = 1/scale (meaningful for the Laplace fit)."""
        return 1.0 / self.scale


class AxisComparison(msgspec.Struct):
    """Gaussian vs Laplace fits on one displacement axis."""

    axis: str
    gaussian: FitResult
    laplace: FitResult
    winner: MotionFamily


class FitReport(msgspec.Struct):
    """Per-axis fit comparison over a displacement corpus."""

    samples: int
    bins: int
    axes: List[AxisComparison]


class ConsistencyCheck(msgspec.Struct):
    """KS test of |dx|, |dy| against the generating family."""

    family: MotionFamily
    p_value_x: float
    p_value_y: float
    significance: float

    @property
    def passed(self) -> bool:
        return self.p_value_x >= self.significance and self.p_value_y >= self.significance


class ScenarioConfig(msgspec.Struct, frozen=True):
    """Settings for one synthetic sequence."""

    frame_size: Tuple[int, int] = (160, 120)
    n_frames: int = 200
    blob_size: Tuple[float, float] = (20.0, 20.0)
    motion: SystemModelParams = msgspec.field(
        default_factory=lambda: SystemModelParams(lambda_x=8.0, lambda_y=8.0)
    )
    distractors: int = 0
    intensity_drift: float = 0.0
    blur_radius: float = 0.0
    noise_std: float = 0.0
    scale_std: float = 0.0
    seed: int = 0


class SyntheticSequence(msgspec.Struct, frozen=True):
    """Rendered frames with their exact ground truth."""

    frames: List[Frame]
    truth: List[BoundingBox]


class SequenceManifest(msgspec.Struct):
    """Where one sequence's frames and ground truth live."""

    name: str
    frame_paths: List[str]
    groundtruth_path: str
    attributes: List[str] = msgspec.field(default_factory=list)
    results_path: Optional[str] = None


class ScorerKind(str, enum.Enum):
    """Observation model used by the tracker."""

    NCC = "ncc"
    ORACLE = "oracle"


class NormalizeBy(str, enum.Enum):
    """Reference box for normalized precision."""

    TRUTH = "truth"
    PRED = "pred"


class TrackerConfig(msgspec.Struct, frozen=True):
    """Every tunable of the harness, as read from a key=value file and CLI flags."""

    family: MotionFamily = MotionFamily.GAUSSIAN
    lambda_x: float = 2.0
    lambda_y: float = 2.0
    standard_gaussian: bool = False
    n_candidates: int = 257
    scales: Tuple[float, ...] = (0.97, 1.0, 1.03)
    sigma_alpha: float = 0.5
    encoding: Encoding = Encoding.PREV
    scorer: ScorerKind = ScorerKind.NCC
    template_width: int = 32
    template_height: int = 32
    update_mode: UpdateMode = UpdateMode.INTERVAL
    update_interval: int = 20
    update_threshold: float = 0.6
    update_rate: float = 0.25
    confidence_source: ConfidenceSource = ConfidenceSource.POSTERIOR
    observation_only: bool = False
    normalize_by: NormalizeBy = NormalizeBy.TRUTH
    seed: int = 0
    bins: int = 60
    workers: int = 1

    def __post_init__(self) -> None:
        if self.template_width < 2 or self.template_height < 2:
            raise ValueError("template resolution must be at least 2x2")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        # construct the views once so invalid combinations fail at load time
        self.system_params()
        self.filter_config()

    def system_params(self) -> SystemModelParams:
        return SystemModelParams(
            family=self.family,
            lambda_x=self.lambda_x,
            lambda_y=self.lambda_y,
            standard_gaussian=self.standard_gaussian,
        )

    def update_policy(self) -> TemplateUpdatePolicy:
        return TemplateUpdatePolicy(
            mode=self.update_mode,
            interval=self.update_interval,
            threshold=self.update_threshold,
            rate=self.update_rate,
        )

    def filter_config(self) -> FilterConfig:
        return FilterConfig(
            n_candidates=self.n_candidates,
            scales=self.scales,
            sigma_alpha=self.sigma_alpha,
            encoding=self.encoding,
            observation_only=self.observation_only,
            seed=self.seed,
            update_policy=self.update_policy(),
            confidence_source=self.confidence_source,
        )

    @property
    def template_size(self) -> Tuple[int, int]:
        return (self.template_width, self.template_height)
