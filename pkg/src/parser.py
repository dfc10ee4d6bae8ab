"""Readers and writers for annotation, frame, results and manifest files."""

import contextlib
import csv
import logging
import os
import re
import tempfile
from pathlib import Path
from typing import IO, Iterator, List, Optional, Sequence, Union

import msgspec
import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FrameFormatError, InvalidBoxError, ParseError
from .models import BoundingBox, EvalCurve, Frame, ResultRecord, SequenceManifest

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RESULTS_HEADER = ["frame", "x", "y", "w", "h", "map_weight", "fallback"]
MANIFEST_NAME = "sequence.json"
GROUNDTRUTH_NAME = "groundtruth.txt"
ATTRIBUTES_NAME = "attributes.txt"
FRAMES_DIR = "img"

_SEPARATOR = re.compile(r"[,\t]")


@contextlib.contextmanager
def atomic_writer(path: PathLike, mode: str = "w") -> Iterator[IO]:
    """Write to a temporary sibling file and rename it over ``path`` on success."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    newline = "" if "b" not in mode else None
    try:
        with os.fdopen(fd, mode, newline=newline) as handle:
            yield handle
        os.replace(tmp_name, target)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp_name)
        raise


@contextlib.contextmanager
def open_text(path: PathLike, newline: Optional[str] = None) -> Iterator[IO[str]]:
    """Open a UTF-8 text file; undecodable bytes surface as ``ParseError``."""
    with open(path, "r", encoding="utf-8", newline=newline) as f:
        try:
            yield f
        except UnicodeDecodeError as e:
            raise ParseError(f"{path}: not valid UTF-8 at byte {e.start}") from None


def _parse_float(value: str, line: int) -> float:
    try:
        return float(value.strip())
    except ValueError:
        raise ParseError(f"not a number: {value.strip()!r}", line=line) from None


def parse_box_line(text: str, line: int) -> BoundingBox:
    """Parse ``x,y,w,h`` (comma or tab separated) into a box."""
    fields = [f for f in _SEPARATOR.split(text.strip()) if f.strip()]
    if len(fields) != 4:
        raise ParseError(f"expected 4 fields x,y,w,h, got {len(fields)}", line=line)
    x, y, w, h = (_parse_float(f, line) for f in fields)
    try:
        return BoundingBox(x=x, y=y, w=w, h=h)
    except InvalidBoxError as e:
        raise InvalidBoxError(str(e), line=line) from None


def parse_groundtruth(path: PathLike) -> List[BoundingBox]:
    """One box per non-empty line, in file order.

    Raises:
        ParseError: malformed line (with its line number)
        InvalidBoxError: non-positive width or height (with its line number)
    """
    boxes = []
    with open_text(path) as f:
        for number, text in enumerate(f, 1):
            if text.strip():
                boxes.append(parse_box_line(text, number))
    logger.debug(f"Parsed {len(boxes)} boxes from {path}")
    return boxes


def write_groundtruth(path: PathLike, boxes: Sequence[BoundingBox]) -> None:
    with atomic_writer(path) as f:
        for b in boxes:
            f.write(f"{b.x!r},{b.y!r},{b.w!r},{b.h!r}\n")


def read_frame(path: PathLike) -> Frame:
    """Load an 8-bit P5 graymap as intensities in [0, 1]."""
    try:
        with Image.open(path) as img:
            if img.format != "PPM" or img.mode != "L":
                raise FrameFormatError(f"{path}: expected an 8-bit P5 graymap, got {img.format}/{img.mode}")
            pixels = np.asarray(img, dtype=np.float64) / 255.0
    except (OSError, UnidentifiedImageError) as e:
        raise FrameFormatError(f"cannot read frame {path}: {e}") from e
    return Frame(pixels=pixels)


def write_frame(path: PathLike, frame: Frame) -> None:
    """Save a frame as a P5 graymap with maxval 255."""
    data = np.round(frame.pixels * 255.0).astype(np.uint8)
    with atomic_writer(path, "wb") as f:
        Image.fromarray(data).save(f, format="PPM")


def write_results(path: PathLike, records: Sequence[ResultRecord]) -> None:
    """Write the results CSV atomically; floats use their shortest exact repr."""
    with atomic_writer(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in records:
            b = r.box
            writer.writerow(
                [r.frame_index, repr(b.x), repr(b.y), repr(b.w), repr(b.h), repr(r.map_weight), int(r.fallback)]
            )
    logger.info(f"Wrote {len(records)} records to {path}")


def read_results(path: PathLike) -> List[ResultRecord]:
    """Parse a results CSV written by ``write_results``."""
    records: List[ResultRecord] = []
    with open_text(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != RESULTS_HEADER:
            raise ParseError(f"{path}: expected header {','.join(RESULTS_HEADER)}", line=1)
        for number, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(RESULTS_HEADER):
                raise ParseError(f"expected {len(RESULTS_HEADER)} columns, got {len(row)}", line=number)
            try:
                frame_index = int(row[0])
                fallback = bool(int(row[6]))
            except ValueError:
                raise ParseError("frame and fallback must be integers", line=number) from None
            box = parse_box_line(",".join(row[1:5]), number)
            records.append(
                ResultRecord(
                    frame_index=frame_index,
                    box=box,
                    map_weight=_parse_float(row[5], number),
                    fallback=fallback,
                )
            )
            if len(records) > 1 and records[-1].frame_index <= records[-2].frame_index:
                raise ParseError("frame indices must be strictly increasing", line=number)
    return records


def write_curve(path: PathLike, curve: EvalCurve) -> None:
    """Dump a curve as ``threshold,value`` CSV rows."""
    with atomic_writer(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["threshold", "value"])
        for t, v in zip(curve.thresholds, curve.values):
            writer.writerow([repr(t), repr(v)])


def write_json(path: PathLike, obj: object) -> None:
    """msgspec-encode ``obj`` to a JSON file."""
    with atomic_writer(path, "wb") as f:
        f.write(msgspec.json.format(msgspec.json.encode(obj), indent=2))


def _resolve(base: Path, manifest: SequenceManifest) -> SequenceManifest:
    def fix(p: str) -> str:
        return str(p if Path(p).is_absolute() else base / p)

    return SequenceManifest(
        name=manifest.name,
        frame_paths=[fix(p) for p in manifest.frame_paths],
        groundtruth_path=fix(manifest.groundtruth_path),
        attributes=list(manifest.attributes),
        results_path=fix(manifest.results_path) if manifest.results_path else None,
    )


def read_manifest(path: PathLike) -> List[SequenceManifest]:
    """Load one manifest object or a list of them; relative paths resolve against the file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read manifest {path}: {e}") from e
    try:
        decoded = msgspec.json.decode(raw, type=Union[List[SequenceManifest], SequenceManifest])
    except msgspec.DecodeError as e:
        raise ParseError(f"invalid manifest {path}: {e}") from e
    items = decoded if isinstance(decoded, list) else [decoded]
    return [_resolve(path.parent, m) for m in items]


def load_sequence_dir(directory: PathLike) -> SequenceManifest:
    """Describe a sequence directory: ``sequence.json`` if present, else ``img/*.pgm`` + ``groundtruth.txt``."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if manifest_path.exists():
        return read_manifest(manifest_path)[0]
    frames = sorted(str(p) for p in (directory / FRAMES_DIR).glob("*.pgm"))
    attributes: List[str] = []
    if (directory / ATTRIBUTES_NAME).exists():
        with open_text(directory / ATTRIBUTES_NAME) as f:
            text = f.read()
        attributes = [t for t in re.split(r"[,\s]+", text) if t]
    return SequenceManifest(
        name=directory.name,
        frame_paths=frames,
        groundtruth_path=str(directory / GROUNDTRUTH_NAME),
        attributes=attributes,
    )
