"""Orchestration of simulate / track / eval / fit over files on disk."""

import asyncio
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from .errors import DataError, EmptyInputError, LengthMismatchError
from .filter import run_tracker
from .metrics import aggregate_reports, evaluate_sequence
from .models import (
    BoundingBox,
    DatasetReport,
    EvalReport,
    FitReport,
    Frame,
    ScenarioConfig,
    ScorerKind,
    SequenceManifest,
    TrackerConfig,
)
from .motion_fit import annotations_to_displacements, build_histogram, compare_fits, histogram_rows
from .observation import NCCScorer, OracleScorer, Scorer
from .parser import (
    FRAMES_DIR,
    GROUNDTRUTH_NAME,
    MANIFEST_NAME,
    atomic_writer,
    load_sequence_dir,
    parse_groundtruth,
    read_frame,
    read_results,
    write_curve,
    write_frame,
    write_groundtruth,
    write_json,
    write_results,
)
from .simulator import generate

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class TrackingHarness:
    """Runs the tracker and the evaluation tools with one resolved configuration."""

    def __init__(self, config: Optional[TrackerConfig] = None) -> None:
        self.config = config or TrackerConfig()

    def make_scorer(self, truth: Sequence[BoundingBox]) -> Scorer:
        if self.config.scorer is ScorerKind.ORACLE:
            return OracleScorer(truth)
        return NCCScorer(self.config.template_size)

    def load_sequence(self, manifest: SequenceManifest) -> Tuple[List[Frame], List[BoundingBox]]:
        """Read every frame and the ground truth of a sequence."""
        if not manifest.frame_paths:
            raise EmptyInputError(f"{manifest.name}: no frames listed")
        try:
            truth = parse_groundtruth(manifest.groundtruth_path)
        except OSError as e:
            raise DataError(f"{manifest.name}: cannot read ground truth: {e}") from e
        if not truth:
            raise EmptyInputError(f"{manifest.name}: ground truth is empty")
        frames = [read_frame(p) for p in manifest.frame_paths]
        logger.info(f"Loaded {manifest.name}: {len(frames)} frames, {len(truth)} boxes")
        return frames, truth

    def run_track(self, manifest: SequenceManifest, output_path: PathLike) -> Path:
        """Track one sequence from its first ground-truth box and write the results CSV."""
        frames, truth = self.load_sequence(manifest)
        if self.config.scorer is ScorerKind.ORACLE and len(truth) < len(frames):
            raise LengthMismatchError(f"{manifest.name}: oracle scorer needs one box per frame")
        logger.info(f"Tracking {manifest.name} ({len(frames)} frames)")
        track = run_tracker(
            frames,
            truth[0],
            self.make_scorer(truth),
            self.config.system_params(),
            self.config.filter_config(),
        )
        write_results(output_path, track.history)
        return Path(output_path)

    async def run_dataset(self, manifests: Sequence[SequenceManifest], output_dir: PathLike) -> List[Path]:
        """Track many sequences concurrently, one worker thread per sequence slot."""
        output_dir = Path(output_dir)
        slots = asyncio.Semaphore(self.config.workers)

        async def run_one(manifest: SequenceManifest) -> Path:
            async with slots:
                # each worker owns a fresh harness, so trackers and writers are never shared
                worker = TrackingHarness(self.config)
                return await asyncio.to_thread(worker.run_track, manifest, output_dir / f"{manifest.name}.csv")

        paths = await asyncio.gather(*(run_one(m) for m in manifests))
        logger.info(f"Tracked {len(paths)} sequences into {output_dir}")
        return list(paths)

    def run_eval(
        self,
        results_path: PathLike,
        groundtruth_path: PathLike,
        name: Optional[str] = None,
        attributes: Sequence[str] = (),
    ) -> EvalReport:
        """Score a results file against ground truth."""
        records = read_results(results_path)
        truth = parse_groundtruth(groundtruth_path)
        if len(records) != len(truth):
            raise LengthMismatchError(f"{len(records)} result records vs {len(truth)} ground-truth boxes")
        return evaluate_sequence(
            [r.box for r in records],
            truth,
            name=name or Path(results_path).stem,
            attributes=attributes,
            normalize_by=self.config.normalize_by.value,
        )

    def run_eval_dataset(self, manifests: Sequence[SequenceManifest], results_dir: Optional[PathLike]) -> DatasetReport:
        """Evaluate every sequence and average them with equal weight."""
        reports = []
        for m in manifests:
            if m.results_path:
                results = Path(m.results_path)
            elif results_dir is not None:
                results = Path(results_dir) / f"{m.name}.csv"
            else:
                raise DataError(f"{m.name}: no results path and no results directory")
            reports.append(self.run_eval(results, m.groundtruth_path, m.name, m.attributes))
        return aggregate_reports(reports)

    def write_report(
        self,
        report: Union[EvalReport, DatasetReport],
        report_path: Optional[PathLike],
        curves_dir: Optional[PathLike],
    ) -> None:
        """Persist a report as JSON and, optionally, its curves as CSV."""
        if report_path is not None:
            write_json(report_path, report)
            logger.info(f"Report saved to {report_path}")
        if curves_dir is not None:
            sequences = report.sequences if isinstance(report, DatasetReport) else [report]
            for r in sequences:
                base = Path(curves_dir) / r.name
                write_curve(f"{base}_precision.csv", r.precision_curve)
                write_curve(f"{base}_success.csv", r.success_curve)
                write_curve(f"{base}_norm_precision.csv", r.norm_precision_curve)

    def simulate(self, scenario: ScenarioConfig, out_dir: PathLike, name: Optional[str] = None) -> SequenceManifest:
        """Generate a synthetic sequence and write frames, ground truth and manifest.

        Returns:
            The written manifest with paths resolved against ``out_dir``
        """
        out_dir = Path(out_dir)
        sequence = generate(scenario)
        frame_paths = []
        for i, frame in enumerate(sequence.frames, 1):
            rel = f"{FRAMES_DIR}/{i:05d}.pgm"
            write_frame(out_dir / rel, frame)
            frame_paths.append(rel)
        write_groundtruth(out_dir / GROUNDTRUTH_NAME, sequence.truth)
        attributes = []
        if scenario.distractors:
            attributes.append("BC")
        if scenario.blur_radius > 0:
            attributes.append("MB")
        if scenario.intensity_drift != 0:
            attributes.append("TC")
        if scenario.scale_std > 0:
            attributes.append("SV")
        manifest = SequenceManifest(
            name=name or out_dir.name,
            frame_paths=frame_paths,
            groundtruth_path=GROUNDTRUTH_NAME,
            attributes=attributes,
        )
        write_json(out_dir / MANIFEST_NAME, manifest)
        logger.info(f"Simulated sequence written to {out_dir}")
        return load_sequence_dir(out_dir)

    def fit(self, annotation_paths: Sequence[PathLike], out_dir: Optional[PathLike] = None) -> FitReport:
        """Compare Gaussian and Laplace fits over the displacements of annotation files."""
        displacements = []
        for path in annotation_paths:
            displacements.extend(annotations_to_displacements(parse_groundtruth(path)))
        report = compare_fits(displacements, bins=self.config.bins)
        if out_dir is not None:
            self._write_fit_outputs(report, displacements, Path(out_dir))
        return report

    def _write_fit_outputs(self, report: FitReport, displacements: list, out_dir: Path) -> None:
        write_json(out_dir / "fit_report.json", report)
        with atomic_writer(out_dir / "fit_report.csv") as f:
            f.write("axis,family,location,scale,rate,r_squared,winner\n")
            for axis in report.axes:
                for fit in (axis.gaussian, axis.laplace):
                    f.write(
                        f"{axis.axis},{fit.family.value},{fit.location!r},{fit.scale!r},"
                        f"{fit.rate!r},{fit.r_squared!r},{int(fit.family is axis.winner)}\n"
                    )
        for axis in report.axes:
            values = [d.dx if axis.axis == "x" else d.dy for d in displacements]
            g, lap = axis.gaussian, axis.laplace
            hists = {
                "signed": build_histogram(values, report.bins, (g.location - 4 * g.scale, g.location + 4 * g.scale)),
                "abs": build_histogram([abs(v) for v in values], report.bins, (0.0, 4 * lap.scale)),
            }
            for kind, hist in hists.items():
                with atomic_writer(out_dir / f"histogram_{axis.axis}_{kind}.csv") as f:
                    f.write("left,right,density\n")
                    for left, right, density in histogram_rows(hist):
                        f.write(f"{left!r},{right!r},{density!r}\n")
        logger.info(f"Fit outputs written to {out_dir}")
