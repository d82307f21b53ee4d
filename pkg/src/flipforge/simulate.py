"""Synthetic fluorescent time-lapse generator with exact mitosis ground truth.

Nuclei are rendered as isotropic Gaussian blobs performing reflected random
walks. A dividing cell brightens (amplitude x1.25) for the frame before the
split, then is replaced by two children at 0.8x its amplitude whose centers
separate to ``split_distance`` over two frames. The ground-truth event for a
division at frame t is (t, parent_x, parent_y) with the parent position taken
at frame t-1.

Randomness layout (fixed so results are reproducible and composable): every
cell owns a PCG64 substream keyed as (seed, 0, *cell_key), where initial cell
i has key (i,) and a child born from a division at frame t has key
parent_key + (t, side). Initial cells draw, in order, x0, y0 (uniform over
the image) and amplitude (uniform in [0.5, 0.9]); every walking step then
draws two standard normals (scaled by drift_sigma), one uniform division
draw, and, when dividing, one uniform split angle. Children draw nothing at
birth. Pixel noise comes from the separate stream (seed, 1), one (H, W)
normal draw per frame in frame order. Adding cells to a config therefore
never perturbs existing trajectories.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .imagecore import AnnotationSet, Frame, MitosisEvent, Sequence
from .seeding import make_rng

_CELL_STREAM = 0
_NOISE_STREAM = 1

_BRIGHTEN_FACTOR = 1.25
_CHILD_AMP_FACTOR = 0.8


@dataclass
class SimConfig:
    width: int = 128
    height: int = 128
    n_frames: int = 30
    n_cells: int = 10
    blob_sigma: float = 2.5
    drift_sigma: float = 1.0
    division_rate: float = 0.02
    split_distance: float = 10.0
    noise_sigma: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 16 or self.height < 16:
            raise ValueError("image dimensions must be >= 16")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.blob_sigma <= 0:
            raise ValueError("blob_sigma must be > 0")
        if not 0.0 <= self.division_rate <= 1.0:
            raise ValueError("division_rate must lie in [0, 1]")
        if self.drift_sigma < 0 or self.noise_sigma < 0 or self.split_distance < 0:
            raise ValueError("drift_sigma, noise_sigma, split_distance must be >= 0")


@dataclass
class _Track:
    """One cell's rendered lifetime: positions and amplitudes per frame."""

    key: tuple[int, ...]
    birth: int
    positions: list[tuple[float, float]] = field(default_factory=list)
    amplitudes: list[float] = field(default_factory=list)


def _reflect(v: float, hi: float) -> float:
    """Fold a coordinate into [0, hi] by mirror reflection."""
    if hi <= 0:
        return 0.0
    period = 2.0 * hi
    v = v % period
    return period - v if v > hi else v


def _simulate_tracks(cfg: SimConfig) -> tuple[list[_Track], list[MitosisEvent]]:
    """Run the cell process only; rendering happens in simulate()."""
    T = cfg.n_frames
    xmax, ymax = float(cfg.width - 1), float(cfg.height - 1)
    tracks: list[_Track] = []
    events: list[MitosisEvent] = []

    # (key, birth frame, preset positions for birth.., base amplitude)
    queue: deque[tuple[tuple[int, ...], int, list[tuple[float, float]], float]] = deque()
    for i in range(cfg.n_cells):
        queue.append(((i,), 0, [], -1.0))

    while queue:
        key, birth, preset, amp = queue.popleft()
        rng = make_rng(cfg.seed, _CELL_STREAM, *key)
        if not preset:
            x0 = rng.uniform(0.0, xmax)
            y0 = rng.uniform(0.0, ymax)
            amp = rng.uniform(0.5, 0.9)
            preset = [(x0, y0)]
        track = _Track(key=key, birth=birth)
        track.positions = list(preset)
        track.amplitudes = [amp] * len(preset)

        f = birth + len(track.positions) - 1
        while f < T - 1:
            dx, dy = rng.standard_normal(2) * cfg.drift_sigma
            u = rng.random()
            if u < cfg.division_rate:
                t_div = f + 1
                theta = rng.uniform(0.0, 2.0 * math.pi)
                ux, uy = math.cos(theta), math.sin(theta)
                px, py = track.positions[-1]
                events.append(MitosisEvent(t=t_div, x=px, y=py))
                track.amplitudes[-1] = amp * _BRIGHTEN_FACTOR
                for side, sgn in ((0, 1.0), (1, -1.0)):
                    child_preset = [
                        (
                            _reflect(px + sgn * cfg.split_distance / 4.0 * ux, xmax),
                            _reflect(py + sgn * cfg.split_distance / 4.0 * uy, ymax),
                        )
                    ]
                    if t_div + 1 <= T - 1:
                        child_preset.append(
                            (
                                _reflect(px + sgn * cfg.split_distance / 2.0 * ux, xmax),
                                _reflect(py + sgn * cfg.split_distance / 2.0 * uy, ymax),
                            )
                        )
                    queue.append(
                        (key + (t_div, side), t_div, child_preset, amp * _CHILD_AMP_FACTOR)
                    )
                break
            px, py = track.positions[-1]
            track.positions.append((_reflect(px + dx, xmax), _reflect(py + dy, ymax)))
            track.amplitudes.append(amp)
            f += 1
        tracks.append(track)

    events.sort(key=lambda ev: (ev.t, ev.x, ev.y))
    return tracks, events


def _add_blob(grid: np.ndarray, x: float, y: float, amp: float, sigma: float) -> None:
    """Add one Gaussian blob, radially truncated at 4*sigma."""
    h, w = grid.shape
    r = 4.0 * sigma
    x0, x1 = max(0, math.floor(x - r)), min(w - 1, math.ceil(x + r))
    y0, y1 = max(0, math.floor(y - r)), min(h - 1, math.ceil(y + r))
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    d2 = (xs[None, :] - x) ** 2 + (ys[:, None] - y) ** 2
    blob = amp * np.exp(-d2 / (2.0 * sigma * sigma))
    blob[d2 > r * r] = 0.0
    grid[y0 : y1 + 1, x0 : x1 + 1] += blob


def simulate(cfg: SimConfig) -> tuple[Sequence, AnnotationSet]:
    """Render a simulated sequence and its exact division annotations.

    Fully deterministic in cfg.seed: two calls with equal configs return
    bitwise-identical frames and identical event lists.
    """
    tracks, events = _simulate_tracks(cfg)
    frames = np.zeros((cfg.n_frames, cfg.height, cfg.width), dtype=np.float64)
    for track in tracks:
        for i, (x, y) in enumerate(track.positions):
            _add_blob(frames[track.birth + i], x, y, track.amplitudes[i], cfg.blob_sigma)

    noise_rng = make_rng(cfg.seed, _NOISE_STREAM)
    for f in range(cfg.n_frames):
        frames[f] += noise_rng.normal(0.0, cfg.noise_sigma, size=frames[f].shape)
    np.clip(frames, 0.0, 1.0, out=frames)

    seq = Sequence(
        name="simulated",
        frames=[Frame(t=f, pixels=frames[f]) for f in range(cfg.n_frames)],
    )
    return seq, AnnotationSet(sequence_name="simulated", events=events)
