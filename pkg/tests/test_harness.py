"""Tests for the simulate / track / eval / fit orchestration."""

import json
from pathlib import Path

import pytest

from src.errors import DataError, EmptyInputError, FrameFormatError, LengthMismatchError
from src.harness import TrackingHarness
from src.models import (
    DatasetReport,
    MotionFamily,
    ScenarioConfig,
    ScorerKind,
    SequenceManifest,
    SystemModelParams,
    TrackerConfig,
)
from src.observation import NCCScorer, OracleScorer
from src.parser import GROUNDTRUTH_NAME, MANIFEST_NAME, load_sequence_dir, read_results, write_groundtruth
from src.simulator import simulate_truth

SCENARIO = ScenarioConfig(frame_size=(64, 48), n_frames=6, blob_size=(12.0, 12.0), seed=2)
SMALL = {"frame_size": (64, 48), "n_frames": 4, "blob_size": (12.0, 12.0)}


@pytest.fixture
def harness() -> TrackingHarness:
    return TrackingHarness(TrackerConfig(n_candidates=33, template_width=12, template_height=12, workers=2))


@pytest.fixture
def sequence(tmp_path: Path, harness: TrackingHarness) -> SequenceManifest:
    return harness.simulate(SCENARIO, tmp_path / "seq", name="seq")


class TestSimulate:
    """Tests for TrackingHarness.simulate."""

    def test_writes_sequence_directory(self, tmp_path: Path, sequence: SequenceManifest) -> None:
        root = tmp_path / "seq"
        assert (root / MANIFEST_NAME).exists()
        assert (root / GROUNDTRUTH_NAME).read_text().count("\n") == SCENARIO.n_frames
        assert sorted(p.name for p in (root / "img").iterdir())[0] == "00001.pgm"
        assert sequence.name == "seq"
        assert len(sequence.frame_paths) == SCENARIO.n_frames
        assert Path(sequence.frame_paths[0]).is_absolute()
        assert load_sequence_dir(root) == sequence

    def test_attribute_tags(self, tmp_path: Path, harness: TrackingHarness) -> None:
        scenario = ScenarioConfig(
            frame_size=(64, 48), n_frames=2, blob_size=(8.0, 8.0), distractors=1, blur_radius=1.0, seed=1
        )
        manifest = harness.simulate(scenario, tmp_path / "clutter")
        assert manifest.attributes == ["BC", "MB"]
        assert manifest.name == "clutter"


class TestTrack:
    """Tests for single-sequence tracking."""

    def test_run_track_writes_results(self, tmp_path: Path, harness: TrackingHarness, sequence) -> None:
        out = harness.run_track(sequence, tmp_path / "results.csv")
        records = read_results(out)
        assert [r.frame_index for r in records] == list(range(1, SCENARIO.n_frames + 1))
        assert records[0].box == simulate_truth(SCENARIO)[0]

    def test_missing_frame_leaves_no_results(self, tmp_path: Path, harness: TrackingHarness, sequence) -> None:
        broken = SequenceManifest(
            name="broken",
            frame_paths=sequence.frame_paths + [str(tmp_path / "missing.pgm")],
            groundtruth_path=sequence.groundtruth_path,
        )
        with pytest.raises(FrameFormatError):
            harness.run_track(broken, tmp_path / "broken.csv")
        assert not (tmp_path / "broken.csv").exists()

    def test_missing_groundtruth(self, tmp_path: Path, harness: TrackingHarness, sequence) -> None:
        broken = SequenceManifest(name="b", frame_paths=sequence.frame_paths, groundtruth_path=str(tmp_path / "no.txt"))
        with pytest.raises(DataError):
            harness.run_track(broken, tmp_path / "b.csv")

    def test_no_frames(self, tmp_path: Path, harness: TrackingHarness) -> None:
        with pytest.raises(EmptyInputError):
            harness.load_sequence(SequenceManifest(name="e", frame_paths=[], groundtruth_path="gt.txt"))

    def test_make_scorer(self, harness: TrackingHarness) -> None:
        assert isinstance(harness.make_scorer([]), NCCScorer)
        oracle = TrackingHarness(TrackerConfig(scorer=ScorerKind.ORACLE)).make_scorer(simulate_truth(SCENARIO))
        assert isinstance(oracle, OracleScorer)


class TestDataset:
    """Tests for the concurrent dataset runner."""

    async def test_run_dataset(self, tmp_path: Path, harness: TrackingHarness) -> None:
        manifests = [
            harness.simulate(ScenarioConfig(**{**SMALL, "seed": seed}), tmp_path / f"s{seed}")
            for seed in range(3)
        ]
        paths = await harness.run_dataset(manifests, tmp_path / "results")
        assert [p.name for p in paths] == ["s0.csv", "s1.csv", "s2.csv"]

        report = harness.run_eval_dataset(manifests, tmp_path / "results")
        assert isinstance(report, DatasetReport)
        assert [r.name for r in report.sequences] == ["s0", "s1", "s2"]
        assert 0.0 <= report.overall.success_auc <= 1.0

    async def test_concurrent_matches_sequential(self, tmp_path: Path, harness: TrackingHarness) -> None:
        manifests = [harness.simulate(SCENARIO, tmp_path / f"d{i}") for i in range(2)]
        paths = await harness.run_dataset(manifests, tmp_path / "parallel")
        sequential = harness.run_track(manifests[0], tmp_path / "seq.csv")
        assert paths[0].read_bytes() == sequential.read_bytes()

    def test_eval_dataset_needs_results_location(self, harness: TrackingHarness, sequence) -> None:
        with pytest.raises(DataError):
            harness.run_eval_dataset([sequence], None)


class TestEval:
    """Tests for evaluation and report writing."""

    def test_eval_perfect_results(self, tmp_path: Path, harness: TrackingHarness, sequence) -> None:
        oracle = TrackingHarness(TrackerConfig(scorer=ScorerKind.ORACLE, n_candidates=33))
        results = oracle.run_track(sequence, tmp_path / "r.csv")
        report = oracle.run_eval(results, sequence.groundtruth_path, attributes=["SV"])
        assert report.name == "r"
        assert report.frames == SCENARIO.n_frames
        assert report.metrics.precision == 1.0
        assert report.attributes == ["SV"]

    def test_length_mismatch(self, tmp_path: Path, harness: TrackingHarness, sequence) -> None:
        results = harness.run_track(sequence, tmp_path / "r.csv")
        short = tmp_path / "short.txt"
        write_groundtruth(short, simulate_truth(SCENARIO)[:3])
        with pytest.raises(LengthMismatchError):
            harness.run_eval(results, short)

    def test_write_report_and_curves(self, tmp_path: Path, harness: TrackingHarness, sequence) -> None:
        results = harness.run_track(sequence, tmp_path / "r.csv")
        report = harness.run_eval(results, sequence.groundtruth_path, name="seq")
        harness.write_report(report, tmp_path / "report.json", tmp_path / "curves")
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["name"] == "seq"
        assert set(data["metrics"]) == {"precision", "success_auc", "norm_precision_auc"}
        names = sorted(p.name for p in (tmp_path / "curves").iterdir())
        assert names == ["seq_norm_precision.csv", "seq_precision.csv", "seq_success.csv"]


class TestFit:
    """Tests for the annotation fit command."""

    def test_fit_writes_outputs(self, tmp_path: Path) -> None:
        params = SystemModelParams(family=MotionFamily.LAPLACE, lambda_x=8.0, lambda_y=8.0)
        paths = []
        for seed in range(2):
            truth = simulate_truth(ScenarioConfig(n_frames=400, motion=params, seed=seed))
            paths.append(tmp_path / f"gt{seed}.txt")
            write_groundtruth(paths[-1], truth)
        report = TrackingHarness(TrackerConfig(bins=40)).fit(paths, tmp_path / "fit")
        assert report.samples == 798
        assert report.bins == 40
        out = tmp_path / "fit"
        for name in ("fit_report.json", "fit_report.csv", "histogram_x_signed.csv", "histogram_y_abs.csv"):
            assert (out / name).exists()
        rows = (out / "fit_report.csv").read_text().splitlines()
        assert rows[0] == "axis,family,location,scale,rate,r_squared,winner"
        assert len(rows) == 5
        assert len((out / "histogram_x_abs.csv").read_text().splitlines()) == 41
