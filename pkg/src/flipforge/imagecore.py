"""Image and annotation data model plus all sequence/annotation file I/O.

Conventions used throughout the toolkit:

* In-memory intensities are float64 in [0, 1]. On disk a frame is a 16-bit
  single-channel grayscale PNG named ``t%04d.png``; the raw value v maps to
  intensity v / 65535.
* x is the column coordinate, y the row coordinate, origin at the top-left
  pixel center. Subpixel event coordinates are preserved, never rounded on
  load.
* A mitosis event with timestamp t is observed across the consecutive frame
  pair (t-1, t), so usable events satisfy 1 <= t <= T-1.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DataError,
    DuplicateEventError,
    EmptySequenceError,
    MixedDimensionsError,
    NonContiguousFramesError,
    UnsupportedBitDepthError,
)

FRAME_FILE_RE = re.compile(r"^t(\d{4})\.png$")

# Pillow modes that decode 16-bit grayscale PNGs, depending on version.
_MODES_16BIT = ("I;16", "I;16B", "I;16L", "I")


@dataclass
class Frame:
    """One 2-D intensity grid at frame index t, values in [0, 1]."""

    t: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"frame index must be >= 0, got {self.t}")
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"pixels must be a non-empty 2-D grid, got shape {px.shape}")
        if not np.all((px >= 0.0) & (px <= 1.0)):
            raise ValueError("frame intensities must lie in [0, 1]")
        px.flags.writeable = False
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class Sequence:
    """Ordered frames 0..T-1 of identical size."""

    name: str
    frames: list[Frame]

    def __post_init__(self) -> None:
        ts = [f.t for f in self.frames]
        if ts != list(range(len(self.frames))):
            raise NonContiguousFramesError(
                f"frame indices must be exactly 0..{len(self.frames) - 1}, got {ts}"
            )
        dims = {(f.height, f.width) for f in self.frames}
        if len(dims) > 1:
            raise MixedDimensionsError(f"frames disagree on dimensions: {sorted(dims)}")

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


@dataclass(frozen=True)
class MitosisEvent:
    """A mitosis at (t, x, y); the division is visible across frames t-1 and t."""

    t: int
    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if self.t < 0:
            raise ValueError(f"event time must be >= 0, got {self.t}")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("event coordinates must be finite")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"event coordinates must be >= 0, got ({self.x}, {self.y})")


@dataclass
class AnnotationSet:
    """Point events for one sequence; used both as partial labels and ground truth."""

    sequence_name: str
    events: list[MitosisEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[tuple[int, float, float]] = set()
        for ev in self.events:
            key = (ev.t, ev.x, ev.y)
            if key in seen:
                raise DuplicateEventError(f"duplicate event {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.events)


def load_frame_png(path: Path | str) -> np.ndarray:
    """Read one 16-bit grayscale PNG into a float64 grid in [0, 1]."""
    with Image.open(path) as im:
        if im.mode not in _MODES_16BIT:
            raise UnsupportedBitDepthError(
                f"{path}: expected 16-bit single-channel PNG, got mode {im.mode!r}"
            )
        raw = np.asarray(im)
    return raw.astype(np.float64) / 65535.0


def save_frame_png(pixels: np.ndarray, path: Path | str) -> None:
    """Quantize a [0, 1] grid to 16-bit and write it as a grayscale PNG."""
    raw = np.round(np.asarray(pixels, dtype=np.float64) * 65535.0).astype(np.uint16)
    Image.fromarray(raw).save(path, format="PNG")


def load_sequence(dir_path: Path | str) -> Sequence:
    """Load all t%04d.png frames from a directory into a Sequence.

    Raises FileNotFoundError for a missing directory, EmptySequenceError when
    no frame file matches, NonContiguousFramesError on index gaps,
    MixedDimensionsError on inconsistent sizes, and UnsupportedBitDepthError
    for non-16-bit files.
    """
    d = Path(dir_path)
    if not d.is_dir():
        raise FileNotFoundError(f"sequence directory not found: {d}")
    indexed: list[tuple[int, Path]] = []
    for p in d.iterdir():
        m = FRAME_FILE_RE.match(p.name)
        if m:
            indexed.append((int(m.group(1)), p))
    if not indexed:
        raise EmptySequenceError(f"no t%04d.png frames in {d}")
    indexed.sort()
    indices = [i for i, _ in indexed]
    if indices != list(range(len(indexed))):
        raise NonContiguousFramesError(
            f"{d}: frame indices {indices} are not contiguous from 0"
        )
    frames = [Frame(t=i, pixels=load_frame_png(p)) for i, p in indexed]
    return Sequence(name=d.name, frames=frames)


def save_sequence(seq: Sequence, dir_path: Path | str) -> None:
    """Write frames as t%04d.png; round-trips within 1/65535 per pixel."""
    if seq.n_frames == 0:
        raise EmptySequenceError("refusing to save a sequence with no frames")
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)
    for frame in seq.frames:
        save_frame_png(frame.pixels, d / f"t{frame.t:04d}.png")


def load_annotations(path: Path | str) -> AnnotationSet:
    """Parse an annotation JSON file; see save_annotations for the schema."""
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or "events" not in doc:
        raise DataError(f"{p}: expected an object with an 'events' list")
    name = doc.get("sequence", "")
    if not isinstance(name, str):
        raise DataError(f"{p}: 'sequence' must be a string")
    raw_events = doc["events"]
    if not isinstance(raw_events, list):
        raise DataError(f"{p}: 'events' must be a list")
    events = []
    for i, item in enumerate(raw_events):
        if not isinstance(item, dict) or not {"t", "x", "y"} <= set(item):
            raise DataError(f"{p}: event #{i} must carry keys t, x, y")
        t, x, y = item["t"], item["x"], item["y"]
        if not isinstance(t, int) or isinstance(t, bool):
            raise DataError(f"{p}: event #{i}: t must be an integer, got {t!r}")
        if not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
            raise DataError(f"{p}: event #{i}: x and y must be numbers")
        try:
            events.append(MitosisEvent(t=t, x=float(x), y=float(y)))
        except ValueError as exc:
            raise DataError(f"{p}: event #{i}: {exc}") from exc
    return AnnotationSet(sequence_name=name, events=events)


def save_annotations(ann: AnnotationSet, path: Path | str) -> None:
    """Write `{"sequence": <name>, "events": [{"t", "x", "y"}, ...]}` as UTF-8 JSON."""
    doc = {
        "sequence": ann.sequence_name,
        "events": [{"t": ev.t, "x": ev.x, "y": ev.y} for ev in ann.events],
    }
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
