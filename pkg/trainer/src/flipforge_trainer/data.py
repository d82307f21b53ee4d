"""Dataset loading, target rendering, and augmentation for generated pairs.

A training sample is the (before, after) image pair of one dataset entry
stacked on the channel axis (channel 0 = earlier frame) plus a heatmap
target rendered on the fly from the entry's pasted-event coordinates:
value at (px, py) = max over events of exp(-((lx-px)^2 + (ly-py)^2) / sigma^2).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetFormatError

DATASET_FORMAT_VERSION = "flipforge-dataset-v1"
FRAME_FILE_RE = re.compile(r"^t(\d{4})\.png$")

_16BIT_MODES = ("I;16", "I;16B", "I;16L", "I")


def load_frame(path: Path | str) -> np.ndarray:
    """One 16-bit grayscale PNG as a float32 grid in [0, 1]."""
    with Image.open(path) as im:
        if im.mode not in _16BIT_MODES:
            raise DatasetFormatError(f"{path}: expected a 16-bit grayscale PNG")
        raw = np.asarray(im)
    return raw.astype(np.float32) / 65535.0


def load_frames_dir(frames_dir: Path | str) -> list[np.ndarray]:
    """All t%04d.png frames of a directory, ordered and gap-checked."""
    d = Path(frames_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"frames directory not found: {d}")
    indexed = sorted(
        (int(m.group(1)), p)
        for p in d.iterdir()
        if (m := FRAME_FILE_RE.match(p.name))
    )
    if not indexed:
        raise DatasetFormatError(f"no t%04d.png frames in {d}")
    if [i for i, _ in indexed] != list(range(len(indexed))):
        raise DatasetFormatError(f"{d}: frame indices are not contiguous from 0")
    return [load_frame(p) for _, p in indexed]


@dataclass
class PairSample:
    inputs: np.ndarray  # (2, H, W) float32: channel 0 = earlier frame
    events: list[tuple[float, float]]
    source_t: int


def render_target(
    events: list[tuple[float, float]], width: int, height: int, sigma: float
) -> np.ndarray:
    """Max-fused Gaussian peaks; note the sigma^2 (not 2 sigma^2) denominator."""
    target = np.zeros((height, width), dtype=np.float32)
    xs = np.arange(width, dtype=np.float32)
    ys = np.arange(height, dtype=np.float32)
    for lx, ly in events:
        d2 = (xs[None, :] - lx) ** 2 + (ys[:, None] - ly) ** 2
        np.maximum(target, np.exp(-d2 / (sigma * sigma)), out=target)
    return target


def load_dataset(dataset_dir: Path | str) -> list[PairSample]:
    """All pairs of a flipforge-dataset-v1 tree."""
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetFormatError(f"{root}: missing manifest.json") from None
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{manifest_path}: malformed JSON: {exc}") from exc
    version = manifest.get("format_version")
    if version != DATASET_FORMAT_VERSION:
        raise DatasetFormatError(
            f"{manifest_path}: format_version {version!r} unsupported "
            f"(need {DATASET_FORMAT_VERSION!r})"
        )
    samples = []
    for record in manifest["pairs"]:
        pair_dir = root / record["path"]
        doc = json.loads((pair_dir / "events.json").read_text(encoding="utf-8"))
        before = load_frame(pair_dir / "before.png")
        after = load_frame(pair_dir / "after.png")
        if before.shape != after.shape:
            raise DatasetFormatError(f"{pair_dir}: before/after shapes disagree")
        samples.append(
            PairSample(
                inputs=np.stack([before, after]),
                events=[(float(e["x"]), float(e["y"])) for e in doc["events"]],
                source_t=int(doc["source_t"]),
            )
        )
    if not samples:
        raise DatasetFormatError(f"{root}: dataset contains no pairs")
    return samples


def augment_sample(
    sample: PairSample,
    augmentations: tuple[str, ...],
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Apply the configured augmentations; returns (inputs, event coords).

    Crop: random window, sides the largest multiples of 8 that leave a
    16 px margin (events falling outside the window are dropped). Flip:
    horizontal / vertical, each with probability 1/2, applied to inputs and
    event coordinates jointly. Brightness: random gain and offset on the
    inputs only, clipped back to [0, 1].
    """
    inputs = sample.inputs
    events = list(sample.events)
    _, h, w = inputs.shape

    if "crop" in augmentations:
        ch = max(8, (h - 16) // 8 * 8)
        cw = max(8, (w - 16) // 8 * 8)
        if ch < h or cw < w:
            y0 = int(rng.integers(0, h - ch + 1))
            x0 = int(rng.integers(0, w - cw + 1))
            inputs = inputs[:, y0 : y0 + ch, x0 : x0 + cw]
            events = [
                (x - x0, y - y0)
                for x, y in events
                if x0 <= x < x0 + cw and y0 <= y < y0 + ch
            ]
            h, w = ch, cw

    if "flip" in augmentations:
        if rng.random() < 0.5:
            inputs = inputs[:, :, ::-1]
            events = [(w - 1 - x, y) for x, y in events]
        if rng.random() < 0.5:
            inputs = inputs[:, ::-1, :]
            events = [(x, h - 1 - y) for x, y in events]

    if "brightness" in augmentations:
        gain = rng.uniform(0.9, 1.1)
        offset = rng.uniform(-0.05, 0.05)
        inputs = np.clip(inputs * gain + offset, 0.0, 1.0)

    return np.ascontiguousarray(inputs, dtype=np.float32), events
