"""Heatmap regression targets and peak decoding.

The target for one event at (lx, ly) is exp(-((lx-px)^2 + (ly-py)^2) / sigma^2)
evaluated exactly at every pixel (px, py); note the sigma^2 denominator, not
2*sigma^2. Multiple events fuse by pointwise maximum. Detections are read
back as thresholded 8-neighbor local maxima with greedy radius suppression.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import DataError, HeatmapFormatError

HMAP_MAGIC = b"HMAP"
HMAP_VERSION = 1
_HEADER = struct.Struct("<4sIII")

DEFAULT_SIGMA = 6.0
DEFAULT_PEAK_THRESHOLD = 0.3
DEFAULT_NMS_RADIUS = 4.0


@dataclass
class Heatmap:
    """A [0, 1] grid; sigma records the rendering width for ground truth."""

    values: np.ndarray
    sigma: float | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 2 or v.size == 0:
            raise ValueError(f"heatmap must be a non-empty 2-D grid, got shape {v.shape}")
        if not np.all((v >= 0.0) & (v <= 1.0)):
            raise ValueError("heatmap values must lie in [0, 1]")
        self.values = v

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Detection:
    """A scored point detection at frame t."""

    t: int
    x: float
    y: float
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


def render_targets(
    events: list[tuple[float, float]], width: int, height: int, sigma: float = DEFAULT_SIGMA
) -> Heatmap:
    """Exact per-pixel rendering of the max-fused event kernels."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    acc = np.zeros((height, width), dtype=np.float64)
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    for lx, ly in events:
        d2 = (xs[None, :] - lx) ** 2 + (ys[:, None] - ly) ** 2
        np.maximum(acc, np.exp(-d2 / (sigma * sigma)), out=acc)
    return Heatmap(values=acc, sigma=sigma)


def extract_peaks(
    heatmap: Heatmap,
    threshold: float = DEFAULT_PEAK_THRESHOLD,
    nms_radius: float = DEFAULT_NMS_RADIUS,
    t: int = 0,
) -> list[Detection]:
    """Thresholded local maxima with greedy Euclidean suppression.

    A candidate is a pixel >= its 8 neighbors and >= threshold. Candidates
    are visited by value descending (ties by (y, x) ascending) and kept iff
    at least nms_radius away from every kept peak. The detection score is
    the heatmap value; t is stamped onto the detections by the caller.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if nms_radius < 1.0:
        raise ValueError("nms_radius must be >= 1")
    v = heatmap.values
    is_peak = (v >= threshold) & (
        v == maximum_filter(v, size=3, mode="constant", cval=-1.0)
    )
    ys, xs = np.nonzero(is_peak)
    if len(ys) == 0:
        return []
    order = np.lexsort((xs, ys, -v[ys, xs]))
    kept: list[tuple[int, int, float]] = []
    r2 = nms_radius * nms_radius
    for i in order:
        x, y = int(xs[i]), int(ys[i])
        if all((x - kx) ** 2 + (y - ky) ** 2 >= r2 for kx, ky, _ in kept):
            kept.append((x, y, float(v[y, x])))
    return [Detection(t=t, x=float(x), y=float(y), score=s) for x, y, s in kept]


def save_heatmap(heatmap: Heatmap, path: Path | str) -> None:
    """Write the binary HMAP format: 16-byte header + float32 row-major payload."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(HMAP_MAGIC, heatmap.width, heatmap.height, HMAP_VERSION)
    payload = np.ascontiguousarray(heatmap.values, dtype="<f4").tobytes()
    with open(p, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_heatmap(path: Path | str) -> Heatmap:
    """Read an HMAP file; float32 values round-trip bit-exactly."""
    p = Path(path)
    blob = p.read_bytes()
    if len(blob) < _HEADER.size:
        raise HeatmapFormatError(f"{p}: truncated header ({len(blob)} bytes)")
    magic, width, height, version = _HEADER.unpack_from(blob)
    if magic != HMAP_MAGIC:
        raise HeatmapFormatError(f"{p}: bad magic {magic!r}")
    if version != HMAP_VERSION:
        raise HeatmapFormatError(f"{p}: unsupported version {version}")
    expected = width * height * 4
    payload = blob[_HEADER.size :]
    if len(payload) != expected:
        raise HeatmapFormatError(
            f"{p}: payload is {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width).copy()
    return Heatmap(values=values, sigma=None)


def save_detections(detections: list[Detection], path: Path | str) -> None:
    """Write `{"detections": [{"t", "x", "y", "score"}, ...]}` as JSON."""
    doc = {
        "detections": [
            {"t": d.t, "x": d.x, "y": d.y, "score": d.score} for d in detections
        ]
    }
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_detections(path: Path | str) -> list[Detection]:
    """Parse a detections JSON file written by save_detections."""
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("detections"), list):
        raise DataError(f"{p}: expected an object with a 'detections' list")
    out = []
    for i, item in enumerate(doc["detections"]):
        if not isinstance(item, dict) or not {"t", "x", "y", "score"} <= set(item):
            raise DataError(f"{p}: detection #{i} must carry keys t, x, y, score")
        try:
            out.append(
                Detection(
                    t=int(item["t"]),
                    x=float(item["x"]),
                    y=float(item["y"]),
                    score=float(item["score"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise DataError(f"{p}: detection #{i}: {exc}") from exc
    return out
