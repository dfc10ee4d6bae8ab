"""Command-line interface for the DBF tracker."""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional, Sequence

from .config import CONFIG_KEYS, resolve_config
from .errors import ScenarioConfigError, TrackingError, UsageError
from .harness import TrackingHarness
from .models import (
    DatasetReport,
    EvalReport,
    FitReport,
    MotionFamily,
    ScenarioConfig,
    SequenceManifest,
    SystemModelParams,
    TrackerConfig,
)
from .parser import load_sequence_dir, read_manifest

logger = logging.getLogger(__name__)

RESULTS_NAME = "results.csv"


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def setup_logging(verbose: bool = False) -> None:
    """Configure logging for the application.

    Args:
        verbose: Whether to use verbose (DEBUG) logging
    """
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )


def _common_options() -> argparse.ArgumentParser:
    # Tunables default to SUPPRESS so only flags actually given override the config file.
    common = ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=False, help="Enable verbose logging")
    common.add_argument("--config", type=str, default=None, help="key=value configuration file")
    common.add_argument("--seed", type=int, help="Seed for candidate sampling and simulation")
    common.add_argument("--family", choices=[f.value for f in MotionFamily], help="Motion kernel family")
    common.add_argument("--lambda-x", dest="lambda_x", type=float, help="Kernel coefficient along x")
    common.add_argument("--lambda-y", dest="lambda_y", type=float, help="Kernel coefficient along y")
    common.add_argument(
        "--standard-gaussian",
        dest="standard_gaussian",
        action="store_true",
        help="Use exp(-(lambda*d)^2/2) instead of exp(-(lambda*d)^2)",
    )
    common.add_argument("--candidates", dest="n_candidates", type=int, help="Candidates per frame (incl. zero)")
    common.add_argument("--scales", type=str, help="Comma-separated scale set, e.g. 0.97,1.0,1.03")
    common.add_argument("--sigma-alpha", dest="sigma_alpha", type=float, help="Displacement penalty width")
    common.add_argument("--encoding", choices=["prev", "avg"], help="Displacement normalization")
    common.add_argument("--scorer", choices=["ncc", "oracle"], help="Observation model")
    common.add_argument("--update-mode", dest="update_mode", choices=["interval", "never", "always"])
    common.add_argument("--update-interval", dest="update_interval", type=int, help="Template update cadence K")
    common.add_argument("--update-threshold", dest="update_threshold", type=float, help="Confidence gate tau")
    common.add_argument("--update-rate", dest="update_rate", type=float, help="Template blend rate eta")
    common.add_argument("--confidence-source", dest="confidence_source", choices=["posterior", "response"])
    common.add_argument(
        "--observation-only",
        dest="observation_only",
        action="store_true",
        help="Drop the motion prior and penalty (ablation)",
    )
    common.add_argument("--normalize-by", dest="normalize_by", choices=["truth", "pred"])
    common.add_argument("--bins", type=int, help="Histogram bins for fit")
    common.add_argument("--workers", type=int, help="Concurrent sequences for dataset runs")
    return common


def build_parser() -> ArgumentParser:
    common = _common_options()
    parser = ArgumentParser(
        prog="dbf-track",
        description="Deep Bayesian Filtering tracker: simulate, track, evaluate and fit motion models",
    )
    sub = parser.add_subparsers(dest="command", metavar="{simulate,track,eval,fit}")
    sub.required = True

    sim = sub.add_parser("simulate", parents=[common], help="Generate a synthetic sequence")
    sim.add_argument("--out", required=True, help="Output sequence directory")
    sim.add_argument("--name", default=None, help="Sequence name (defaults to the directory name)")
    sim.add_argument("--frames", type=int, default=200, help="Number of frames")
    sim.add_argument("--width", type=int, default=160, help="Frame width in pixels")
    sim.add_argument("--height", type=int, default=120, help="Frame height in pixels")
    sim.add_argument("--blob-width", type=float, default=20.0, help="Target width in pixels")
    sim.add_argument("--blob-height", type=float, default=20.0, help="Target height in pixels")
    sim.add_argument("--distractors", type=int, default=0, help="Number of distractor blobs")
    sim.add_argument("--drift", type=float, default=0.0, help="Global intensity drift per frame")
    sim.add_argument("--blur", type=float, default=0.0, help="Gaussian blur radius")
    sim.add_argument("--noise", type=float, default=0.0, help="Sensor noise standard deviation")
    sim.add_argument("--scale-std", type=float, default=0.0, help="Per-frame log-size change std")
    sim.add_argument(
        "--motion-family", choices=[f.value for f in MotionFamily], default="gaussian", help="Target motion family"
    )
    sim.add_argument("--motion-lambda", type=float, default=8.0, help="Target motion coefficient")

    trk = sub.add_parser("track", parents=[common], help="Track one sequence or a dataset")
    source = trk.add_mutually_exclusive_group(required=True)
    source.add_argument("--sequence", help="Sequence directory")
    source.add_argument("--manifest", help="Dataset manifest (JSON list of sequences)")
    trk.add_argument("--output", default=None, help=f"Results CSV (default <sequence>/{RESULTS_NAME})")
    trk.add_argument("--output-dir", default=None, help="Results directory for dataset runs")

    ev = sub.add_parser("eval", parents=[common], help="Score results against ground truth")
    ev.add_argument("--results", default=None, help="Results CSV")
    ev.add_argument("--gt", default=None, help="Ground-truth annotation file")
    ev.add_argument("--name", default=None, help="Sequence name in the report")
    ev.add_argument("--attributes", default="", help="Comma-separated attribute tags")
    ev.add_argument("--manifest", default=None, help="Dataset manifest for aggregate evaluation")
    ev.add_argument("--results-dir", default=None, help="Directory with <name>.csv results")
    ev.add_argument("--report", default=None, help="Write the report as JSON")
    ev.add_argument("--curves-dir", default=None, help="Write precision/success curves as CSV")

    fit = sub.add_parser("fit", parents=[common], help="Fit Gaussian and Laplace models to annotations")
    fit.add_argument("annotations", nargs="+", help="Annotation files")
    fit.add_argument("--out-dir", default=None, help="Directory for histogram and fit-report CSVs")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Parsed arguments
    """
    return build_parser().parse_args(argv)


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Tunables given on the command line, keyed like the config file."""
    return {k: v for k, v in vars(args).items() if k in CONFIG_KEYS}


def print_eval_summary(report: EvalReport) -> None:
    m = report.metrics
    print(f"{report.name}: precision@20px={m.precision:.4f} success_auc={m.success_auc:.4f} "
          f"norm_precision_auc={m.norm_precision_auc:.4f} frames={report.frames}")


def print_dataset_summary(report: DatasetReport) -> None:
    for r in report.sequences:
        print_eval_summary(r)
    o = report.overall
    print(f"\n=== Overall ({len(report.sequences)} sequences) ===")
    print(
        f"precision@20px={o.precision:.4f} success_auc={o.success_auc:.4f} "
        f"norm_precision_auc={o.norm_precision_auc:.4f}"
    )
    for tag, m in sorted(report.by_attribute.items()):
        print(f"[{tag}] precision@20px={m.precision:.4f} success_auc={m.success_auc:.4f}")


def print_fit_summary(report: FitReport) -> None:
    print(f"\n=== Motion fit over {report.samples} displacements ({report.bins} bins) ===")
    for axis in report.axes:
        g, lap = axis.gaussian, axis.laplace
        print(f"{axis.axis}: gaussian mu={g.location:.4f} sigma={g.scale:.4f} R2={g.r_squared:.4f} | "
              f"laplace lambda={lap.rate:.4f} R2={lap.r_squared:.4f} -> {axis.winner.value}")


def _scenario(args: argparse.Namespace, config: TrackerConfig) -> ScenarioConfig:
    try:
        motion = SystemModelParams(
            family=MotionFamily(args.motion_family),
            lambda_x=args.motion_lambda,
            lambda_y=args.motion_lambda,
        )
    except ValueError as e:
        raise ScenarioConfigError(str(e)) from e
    return ScenarioConfig(
        frame_size=(args.width, args.height),
        n_frames=args.frames,
        blob_size=(args.blob_width, args.blob_height),
        motion=motion,
        distractors=args.distractors,
        intensity_drift=args.drift,
        blur_radius=args.blur,
        noise_std=args.noise,
        scale_std=args.scale_std,
        seed=config.seed,
    )


def _manifests(args: argparse.Namespace) -> List[SequenceManifest]:
    if args.manifest:
        return read_manifest(args.manifest)
    return [load_sequence_dir(args.sequence)]


async def run_command(args: argparse.Namespace, harness: TrackingHarness) -> None:
    """Dispatch one parsed subcommand."""
    if args.command == "simulate":
        harness.simulate(_scenario(args, harness.config), args.out, args.name)

    elif args.command == "track":
        manifests = _manifests(args)
        if args.sequence:
            output = args.output or str(Path(args.sequence) / RESULTS_NAME)
            harness.run_track(manifests[0], output)
        else:
            if not args.output_dir:
                raise UsageError("track --manifest needs --output-dir")
            await harness.run_dataset(manifests, args.output_dir)

    elif args.command == "eval":
        report: Any
        if args.manifest:
            report = harness.run_eval_dataset(read_manifest(args.manifest), args.results_dir)
            print_dataset_summary(report)
        else:
            if not args.results or not args.gt:
                raise UsageError("eval needs --results and --gt (or --manifest)")
            attributes = [a.strip() for a in args.attributes.split(",") if a.strip()]
            report = harness.run_eval(args.results, args.gt, args.name, attributes)
            print_eval_summary(report)
        harness.write_report(report, args.report, args.curves_dir)

    elif args.command == "fit":
        print_fit_summary(harness.fit(args.annotations, args.out_dir))


async def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI.

    Returns:
        Exit code (0 success, 1 usage, 2 data error, 3 runtime tracking error)
    """
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    setup_logging(args.verbose)

    try:
        config = resolve_config(args.config, config_overrides(args))
        logger.info(f"Running {args.command}")
        await run_command(args, TrackingHarness(config))
        return 0
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return e.exit_code
    except TrackingError as e:
        logger.error(f"Error: {e}", exc_info=True)
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=True)
        return 2
    except Exception as e:
        logger.error(f"Error: {e}", exc_info=True)
        return 3


def run() -> None:
    """Entry point for the CLI script."""
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    run()
