"""Motion-distribution study: displacements from annotations, Gaussian vs Laplace fits.

Fits are maximum likelihood on the raw samples; R^2 against a density
histogram is reported as goodness of fit and decides the comparison. The
Gaussian is fitted to signed displacements, the Laplace to their absolute
values with the half-line density lambda * exp(-lambda |d|).
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import DegenerateFitError, EmptyInputError, UndefinedRSquaredError
from .geometry import as_offsets, displacement_avg_norm
from .models import (
    AxisComparison,
    BoundingBox,
    ConsistencyCheck,
    Displacement,
    FitReport,
    FitResult,
    Histogram,
    MotionFamily,
    SystemModelParams,
)
from .system_model import axis_std

logger = logging.getLogger(__name__)

DEFAULT_BINS = 60
MIN_SAMPLES = 100


def annotations_to_displacements(boxes: Sequence[BoundingBox]) -> List[Displacement]:
    """Average-normalized displacement between each pair of consecutive boxes."""
    if len(boxes) < 2:
        raise EmptyInputError(f"need at least 2 boxes to form a displacement, got {len(boxes)}")
    return [displacement_avg_norm(a, b) for a, b in zip(boxes, boxes[1:])]


def build_histogram(data: Sequence[float], bins: int, value_range: Tuple[float, float]) -> Histogram:
    """Density histogram over ``value_range``; samples outside the range are dropped."""
    arr = np.asarray(data, dtype=float)
    counts, edges = np.histogram(arr, bins=bins, range=value_range)
    total = counts.sum()
    if total == 0:
        raise DegenerateFitError(f"no samples fall inside {value_range}")
    densities = counts / (total * np.diff(edges))
    return Histogram(bin_edges=edges, densities=densities)


def r_squared(hist: Histogram, model_density: Callable[[np.ndarray], np.ndarray]) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot of a density at bin centers."""
    observed = hist.densities
    predicted = np.asarray(model_density(hist.centers), dtype=float)
    ss_tot = float(np.sum((observed - observed.mean()) ** 2))
    if len(observed) < 2 or ss_tot == 0.0:
        raise UndefinedRSquaredError("histogram densities have no spread")
    ss_res = float(np.sum((observed - predicted) ** 2))
    return 1.0 - ss_res / ss_tot


def fit_gaussian(data: Sequence[float], bins: int = DEFAULT_BINS) -> FitResult:
    """MLE normal fit (divisor n) with R^2 over [mu - 4 sigma, mu + 4 sigma]."""
    arr = np.asarray(data, dtype=float)
    if arr.size < 2 or np.all(arr == arr[0]):
        raise DegenerateFitError("Gaussian fit needs at least two distinct values")
    mu = float(np.mean(arr))
    sigma = float(np.std(arr))
    hist = build_histogram(arr, bins, (mu - 4 * sigma, mu + 4 * sigma))
    r2 = r_squared(hist, lambda x: stats.norm.pdf(x, loc=mu, scale=sigma))
    return FitResult(family=MotionFamily.GAUSSIAN, location=mu, scale=sigma, r_squared=r2)


def fit_laplace_abs(data_abs: Sequence[float], bins: int = DEFAULT_BINS) -> FitResult:
    """MLE half-line Laplace fit to absolute displacements: b = mean, lambda = 1/b.

    R^2 is taken over [0, 4 b]; ``FitResult.rate`` gives lambda.
    """
    arr = np.asarray(data_abs, dtype=float)
    if arr.size < 2:
        raise EmptyInputError("Laplace fit needs at least two values")
    if np.any(arr < 0):
        raise ValueError("absolute displacements must be non-negative")
    b = float(np.mean(arr))
    if b == 0.0:
        raise DegenerateFitError("all absolute displacements are zero")
    hist = build_histogram(arr, bins, (0.0, 4 * b))
    r2 = r_squared(hist, lambda x: stats.expon.pdf(x, scale=b))
    return FitResult(family=MotionFamily.LAPLACE, location=0.0, scale=b, r_squared=r2)


def compare_fits(displacements: Sequence[Displacement], bins: int = DEFAULT_BINS) -> FitReport:
    """Fit both families per axis and pick the one with the higher R^2."""
    if len(displacements) < MIN_SAMPLES:
        raise EmptyInputError(f"need at least {MIN_SAMPLES} displacements, got {len(displacements)}")
    offsets = as_offsets(displacements)
    axes = []
    for axis, column in (("x", offsets[:, 0]), ("y", offsets[:, 1])):
        gauss = fit_gaussian(column, bins)
        laplace = fit_laplace_abs(np.abs(column), bins)
        winner = MotionFamily.LAPLACE if laplace.r_squared > gauss.r_squared else MotionFamily.GAUSSIAN
        logger.info(
            f"axis {axis}: gaussian R2={gauss.r_squared:.4f} laplace R2={laplace.r_squared:.4f} "
            f"-> {winner.value}"
        )
        axes.append(AxisComparison(axis=axis, gaussian=gauss, laplace=laplace, winner=winner))
    return FitReport(samples=len(offsets), bins=bins, axes=axes)


def consistency_check(
    displacements: Sequence[Displacement],
    params: SystemModelParams,
    significance: float = 0.01,
    subsample: Optional[int] = None,
) -> ConsistencyCheck:
    """Kolmogorov-Smirnov test of |dx| and |dy| against the generating family.

    The absolute values follow a half-normal (Gaussian kernels) or an
    exponential with rate lambda (Laplace kernel).
    """
    offsets = np.abs(as_offsets(displacements))
    if subsample is not None:
        offsets = offsets[:subsample]
    p_values = []
    for column, lam in ((offsets[:, 0], params.lambda_x), (offsets[:, 1], params.lambda_y)):
        if params.family is MotionFamily.LAPLACE:
            result = stats.kstest(column, stats.expon(scale=1.0 / lam).cdf)
        else:
            result = stats.kstest(column, stats.halfnorm(scale=axis_std(params, lam)).cdf)
        p_values.append(float(result.pvalue))
    check = ConsistencyCheck(
        family=params.family, p_value_x=p_values[0], p_value_y=p_values[1], significance=significance
    )
    logger.info(f"KS check ({params.family.value}): p_x={p_values[0]:.4f} p_y={p_values[1]:.4f}")
    return check


def histogram_rows(hist: Histogram) -> List[Tuple[float, float, float]]:
    """(left edge, right edge, density) rows for CSV dumps."""
    edges = hist.bin_edges
    return [(float(edges[i]), float(edges[i + 1]), float(d)) for i, d in enumerate(hist.densities)]
