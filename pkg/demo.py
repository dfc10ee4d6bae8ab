"""Simulate a sequence, track it and print the evaluation, all in one process."""

import logging
import sys
import tempfile
from pathlib import Path

from src.cli import print_eval_summary, setup_logging
from src.harness import TrackingHarness
from src.models import ScenarioConfig, TrackerConfig
from src.parser import GROUNDTRUTH_NAME


def demo(workdir: Path, seed: int = 0) -> int:
    harness = TrackingHarness(TrackerConfig(seed=seed))
    sequence_dir = workdir / "demo_sequence"
    manifest = harness.simulate(ScenarioConfig(n_frames=100, distractors=1, noise_std=0.02, seed=seed), sequence_dir)
    results = harness.run_track(manifest, sequence_dir / "results.csv")
    report = harness.run_eval(results, sequence_dir / GROUNDTRUTH_NAME, name="demo")
    print_eval_summary(report)
    return 0


if __name__ == "__main__":
    setup_logging(verbose="-v" in sys.argv)
    logging.getLogger(__name__).info("Running demo")
    with tempfile.TemporaryDirectory() as tmp:
        sys.exit(demo(Path(tmp)))
