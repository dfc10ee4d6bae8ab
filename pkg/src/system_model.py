"""Brownian-motion system model: prior density over displacements and sampling.

Increments are independent, so the transition density p(s_t | s_{t-1})
reduces to the fixed prior p(s_t). Densities follow the kernels exactly as
printed: the Gaussian exponent is -(lambda * delta)^2 unless
``standard_gaussian`` is set, in which case it is -(lambda * delta)^2 / 2.
"""

import logging
import math
from typing import List, Sequence, Union

import numpy as np

from .errors import EmptyInputError
from .models import Displacement, MotionFamily, SystemModelParams

logger = logging.getLogger(__name__)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

SeedLike = Union[int, Sequence[int]]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Reproducible generator on the counter-based Philox bit stream."""
    return np.random.Generator(np.random.Philox(seed))


def axis_density(params: SystemModelParams, delta: np.ndarray, lam: float) -> np.ndarray:
    """One-axis kernel evaluated element-wise."""
    delta = np.asarray(delta, dtype=float)
    if params.family is MotionFamily.LAPLACE:
        return (lam / 2.0) * np.exp(-lam * np.abs(delta))
    if params.standard_gaussian:
        return lam * _INV_SQRT_2PI * np.exp(-0.5 * (lam * delta) ** 2)
    return lam * _INV_SQRT_2PI * np.exp(-((lam * delta) ** 2))


def prior_density_array(params: SystemModelParams, offsets: np.ndarray) -> np.ndarray:
    """Joint prior p_x(dx) * p_y(dy) for an (n, 2) array of displacements."""
    offsets = np.asarray(offsets, dtype=float).reshape(-1, 2)
    return axis_density(params, offsets[:, 0], params.lambda_x) * axis_density(
        params, offsets[:, 1], params.lambda_y
    )


def prior_density(params: SystemModelParams, d: Displacement) -> float:
    """Prior density of a single displacement.

    Args:
        params: Kernel family and conversion coefficients
        d: Displacement to evaluate

    Returns:
        p_x(d.dx) * p_y(d.dy), maximal at (0, 0)
    """
    return float(prior_density_array(params, np.array([[d.dx, d.dy]]))[0])


def transition_density(params: SystemModelParams, prev: Displacement, cur: Displacement) -> float:
    """p(cur | prev); independent increments make this the prior of ``cur``."""
    del prev
    return prior_density(params, cur)


def axis_std(params: SystemModelParams, lam: float) -> float:
    """Standard deviation of the sampling distribution along one axis."""
    if params.family is MotionFamily.LAPLACE:
        return math.sqrt(2.0) / lam
    if params.standard_gaussian:
        return 1.0 / lam
    return 1.0 / (lam * math.sqrt(2.0))


def sample_increments(params: SystemModelParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. increments as an (n, 2) array from a caller-owned generator."""
    if n < 1:
        raise EmptyInputError(f"cannot draw {n} samples; need at least one")
    if params.family is MotionFamily.LAPLACE:
        scale = np.array([1.0 / params.lambda_x, 1.0 / params.lambda_y])
        return rng.laplace(0.0, scale, size=(n, 2))
    std = np.array([axis_std(params, params.lambda_x), axis_std(params, params.lambda_y)])
    return rng.normal(0.0, std, size=(n, 2))


def sample_candidates(params: SystemModelParams, n: int, rng_seed: SeedLike) -> List[Displacement]:
    """Draw ``n`` candidate displacements from the prior, deterministically per seed."""
    draws = sample_increments(params, n, make_rng(rng_seed))
    logger.debug(f"Sampled {n} {params.family.value} candidates")
    return [Displacement(dx=float(dx), dy=float(dy)) for dx, dy in draws]
