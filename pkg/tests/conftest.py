"""Configuration for pytest."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root to the path so tests can import ``src``
root_path = str(Path(__file__).parent.parent)
if root_path not in sys.path:
    sys.path.insert(0, root_path)

from src.models import BoundingBox, ScenarioConfig  # noqa: E402
from src.simulator import generate  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def box() -> BoundingBox:
    return BoundingBox(x=40.0, y=30.0, w=20.0, h=20.0)


@pytest.fixture
def small_scenario() -> ScenarioConfig:
    return ScenarioConfig(frame_size=(80, 60), n_frames=12, blob_size=(16.0, 16.0), seed=3)


@pytest.fixture
def small_sequence(small_scenario):
    return generate(small_scenario)
