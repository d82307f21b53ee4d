"""Fully labeled dataset synthesis from partially annotated sequences.

The pipeline per frame pair: start from the time-flipped pair (so any real,
possibly unannotated division turns into a fusion-like appearance and the
pair is a guaranteed negative), then paste cropped before/after division
patches at random free locations with a Gaussian alpha mask. The paste
locations become exact labels for the generated pair.

Paste centers are drawn as real values but applied at grid positions
(rounded half-even); the recorded label is the rounded center actually
used, so labels are exact by construction.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataError, EmptyCropBankError
from .imagecore import (
    AnnotationSet,
    Frame,
    MitosisEvent,
    Sequence,
    save_frame_png,
)
from .seeding import derive_seed, make_rng

log = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = "flipforge-dataset-v1"

PASTE_MODES = ("alpha", "direct")


def _round_pixel(v: float) -> int:
    # np.round = half-even; used for both crop extraction and paste centers.
    return int(np.round(v))


@dataclass
class FramePair:
    """Two consecutive frames; `flipped` marks reversed time order."""

    before: Frame
    after: Frame
    source_t: int
    flipped: bool = False

    def __post_init__(self) -> None:
        if (self.before.height, self.before.width) != (self.after.height, self.after.width):
            raise ValueError("pair frames must share dimensions")

    @property
    def width(self) -> int:
        return self.before.width

    @property
    def height(self) -> int:
        return self.before.height


@dataclass
class CropPair:
    """s x s patches cut around one annotated division (frames t-1 and t)."""

    before_patch: np.ndarray
    after_patch: np.ndarray
    source_event: MitosisEvent
    size: int

    def __post_init__(self) -> None:
        if self.size % 2 != 0:
            raise ValueError("crop size must be even")
        for name in ("before_patch", "after_patch"):
            patch = np.array(getattr(self, name), dtype=np.float64)
            if patch.shape != (self.size, self.size):
                raise ValueError(f"{name} must be {self.size}x{self.size}, got {patch.shape}")
            if not np.all((patch >= 0.0) & (patch <= 1.0)):
                raise ValueError(f"{name} intensities must lie in [0, 1]")
            patch.flags.writeable = False
            setattr(self, name, patch)


@dataclass
class BlendMask:
    """Per-pixel alpha weights in [0, 1] for compositing one patch.

    Masks from make_blend_mask are peak-normalized (max exactly 1); the type
    itself also admits degenerate weights such as all-zero.
    """

    alpha: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        a = np.array(self.alpha, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("alpha must be a square grid")
        if not np.all((a >= 0.0) & (a <= 1.0)):
            raise ValueError("alpha must lie in [0, 1]")
        a.flags.writeable = False
        self.alpha = a


@dataclass
class LabeledPair:
    """A generated pair plus the paste centers that are its exact labels."""

    pair: FramePair
    events: list[tuple[float, float]]
    crop_ids: list[int]
    seed: int

    def __post_init__(self) -> None:
        if len(self.events) != len(self.crop_ids):
            raise ValueError("events and crop_ids must have equal length")


@dataclass
class GenConfig:
    """Dataset-generation knobs: 40 px crops, 1-10 pastes per pair, feather
    sigma drawn from [2, 8]."""

    crop_size: int = 40
    k_min: int = 1
    k_max: int = 10
    mask_sigma_min: float = 2.0
    mask_sigma_max: float = 8.0
    mask_disk_radius: float | None = None  # resolved to crop_size / 4
    paste_mode: str = "alpha"
    max_place_attempts: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.crop_size < 8 or self.crop_size % 2 != 0:
            raise ValueError("crop_size must be even and >= 8")
        if not 0 <= self.k_min <= self.k_max:
            raise ValueError("need 0 <= k_min <= k_max")
        if self.mask_sigma_min <= 0 or self.mask_sigma_max < self.mask_sigma_min:
            raise ValueError("need 0 < mask_sigma_min <= mask_sigma_max")
        if self.mask_disk_radius is None:
            self.mask_disk_radius = self.crop_size / 4.0
        if not 0 < self.mask_disk_radius < self.crop_size / 2:
            raise ValueError("mask_disk_radius must lie in (0, crop_size/2)")
        if self.paste_mode not in PASTE_MODES:
            raise ValueError(f"paste_mode must be one of {PASTE_MODES}")
        if self.max_place_attempts < 1:
            raise ValueError("max_place_attempts must be >= 1")


def flip_pair(pair: FramePair) -> FramePair:
    """Swap frame order and toggle the flipped flag; pixels are untouched."""
    return FramePair(
        before=pair.after, after=pair.before, source_t=pair.source_t, flipped=not pair.flipped
    )


def pair_at(seq: Sequence, t: int) -> FramePair:
    """The natural-order pair (frame t-1, frame t)."""
    if not 1 <= t <= seq.n_frames - 1:
        raise ValueError(f"pair time must lie in [1, {seq.n_frames - 1}], got {t}")
    return FramePair(before=seq.frames[t - 1], after=seq.frames[t], source_t=t, flipped=False)


def build_crop_bank(seq: Sequence, labels: AnnotationSet, size: int) -> list[CropPair]:
    """Cut s x s before/after patches around every usable annotation.

    Events too close to a border (center, rounded, nearer than size/2) or
    with t outside [1, T-1] are skipped with a warning rather than failing
    the whole bank.
    """
    half = size // 2
    bank: list[CropPair] = []
    for ev in labels.events:
        if not 1 <= ev.t <= seq.n_frames - 1:
            log.warning("skipping event %s: t outside [1, %d]", ev, seq.n_frames - 1)
            continue
        cx, cy = _round_pixel(ev.x), _round_pixel(ev.y)
        if not (half <= cx <= seq.width - half and half <= cy <= seq.height - half):
            log.warning("skipping event %s: closer than %d px to a border", ev, half)
            continue
        rows = slice(cy - half, cy + half)
        cols = slice(cx - half, cx + half)
        bank.append(
            CropPair(
                before_patch=seq.frames[ev.t - 1].pixels[rows, cols],
                after_patch=seq.frames[ev.t].pixels[rows, cols],
                source_event=ev,
                size=size,
            )
        )
    return bank


def make_blend_mask(size: int, disk_radius: float, sigma: float) -> BlendMask:
    """Gaussian-feathered alpha mask: blurred centered disk, peak-normalized.

    A binary disk of `disk_radius` at the patch center ((size-1)/2 in both
    axes) is convolved with an isotropic Gaussian of std `sigma` (truncated
    at 4 sigma, zero-padded borders) and divided by its maximum, so the
    pasted core keeps full contrast while edges feather out.
    """
    if not 0 < disk_radius < size / 2:
        raise ValueError("disk_radius must lie in (0, size/2)")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    disk = (((yy - c) ** 2 + (xx - c) ** 2) <= disk_radius * disk_radius).astype(np.float64)
    if disk.max() == 0.0:
        raise ValueError(f"disk_radius {disk_radius} covers no pixel of a {size}x{size} patch")
    blurred = gaussian_filter(disk, sigma=sigma, mode="constant", cval=0.0, truncate=4.0)
    return BlendMask(alpha=blurred / blurred.max(), sigma=sigma)


def paste_event(
    pair: FramePair,
    crop: CropPair,
    mask: BlendMask,
    center: tuple[float, float],
    mode: str = "alpha",
) -> FramePair:
    """Composite one crop pair into both frames around `center`.

    In alpha mode each pixel becomes (1-a)*target + a*crop (a convex
    combination, so outputs stay between the two inputs); in direct mode the
    patch overwrites the target. Pixels outside the s x s window are
    bit-identical to the input.
    """
    if mode not in PASTE_MODES:
        raise ValueError(f"mode must be one of {PASTE_MODES}")
    s = crop.size
    if mask.alpha.shape != (s, s):
        raise ValueError("mask size must match crop size")
    half = s // 2
    cx, cy = _round_pixel(center[0]), _round_pixel(center[1])
    if not (half <= cx <= pair.width - half and half <= cy <= pair.height - half):
        raise ValueError(
            f"paste center ({cx}, {cy}) closer than {half} px to a border of "
            f"{pair.width}x{pair.height}"
        )
    window = (slice(cy - half, cy + half), slice(cx - half, cx + half))
    before = np.array(pair.before.pixels)
    after = np.array(pair.after.pixels)
    if mode == "alpha":
        a = mask.alpha
        before[window] = (1.0 - a) * before[window] + a * crop.before_patch
        after[window] = (1.0 - a) * after[window] + a * crop.after_patch
    else:
        before[window] = crop.before_patch
        after[window] = crop.after_patch
    return FramePair(
        before=Frame(t=pair.before.t, pixels=before),
        after=Frame(t=pair.after.t, pixels=after),
        source_t=pair.source_t,
        flipped=pair.flipped,
    )


def generate_pair(
    seq: Sequence, t: int, bank: list[CropPair], cfg: GenConfig, pair_seed: int
) -> LabeledPair:
    """Build one labeled pair for time t from the flipped pair (I_t, I_{t-1}).

    Draw order under `pair_seed` (PCG64): the paste count k uniform in
    [k_min, k_max]; then per paste a bank index (with replacement), a mask
    sigma uniform in [mask_sigma_min, mask_sigma_max], and center candidates
    uniform over the margin-safe region until one lands at least crop_size
    away (Euclidean) from every accepted center. After max_place_attempts
    rejected candidates the pair is emitted with the pastes placed so far.
    """
    if not bank:
        raise EmptyCropBankError("cannot generate pairs from an empty crop bank")
    if not 1 <= t <= seq.n_frames - 1:
        raise ValueError(f"pair time must lie in [1, {seq.n_frames - 1}], got {t}")
    rng = make_rng(pair_seed)
    pair = FramePair(before=seq.frames[t], after=seq.frames[t - 1], source_t=t, flipped=True)

    s = cfg.crop_size
    half = s // 2
    if seq.width < s or seq.height < s:
        raise ValueError(f"sequence {seq.width}x{seq.height} smaller than crop size {s}")
    k = int(rng.integers(cfg.k_min, cfg.k_max + 1))
    events: list[tuple[float, float]] = []
    crop_ids: list[int] = []
    for _ in range(k):
        idx = int(rng.integers(0, len(bank)))
        sigma = float(rng.uniform(cfg.mask_sigma_min, cfg.mask_sigma_max))
        placed = None
        for _attempt in range(cfg.max_place_attempts):
            x = rng.uniform(half, seq.width - half)
            y = rng.uniform(half, seq.height - half)
            cx, cy = _round_pixel(x), _round_pixel(y)
            if all(math.hypot(cx - ex, cy - ey) >= s for ex, ey in events):
                placed = (cx, cy)
                break
        if placed is None:
            break
        mask = make_blend_mask(s, cfg.mask_disk_radius, sigma)
        pair = paste_event(pair, bank[idx], mask, placed, cfg.paste_mode)
        events.append((float(placed[0]), float(placed[1])))
        crop_ids.append(idx)
    return LabeledPair(pair=pair, events=events, crop_ids=crop_ids, seed=pair_seed)


def _write_labeled_pair(lp: LabeledPair, pair_dir: Path) -> None:
    pair_dir.mkdir(parents=True, exist_ok=True)
    save_frame_png(lp.pair.before.pixels, pair_dir / "before.png")
    save_frame_png(lp.pair.after.pixels, pair_dir / "after.png")
    doc = {
        "source_t": lp.pair.source_t,
        "events": [{"x": x, "y": y} for x, y in lp.events],
        "crop_ids": lp.crop_ids,
        "seed": lp.seed,
    }
    with open(pair_dir / "events.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def generate_dataset(
    seq: Sequence,
    labels: AnnotationSet,
    cfg: GenConfig,
    out_dir: Path | str,
    workers: int = 1,
) -> dict:
    """Emit one labeled pair per t in 1..T-1 plus a manifest; returns the manifest.

    Per-pair seeds are derived as derive_seed(cfg.seed, t), so output is a
    pure function of (sequence, labels, cfg) under any worker schedule.
    """
    bank = build_crop_bank(seq, labels, cfg.crop_size)
    if not bank:
        raise EmptyCropBankError("no usable annotation to build the crop bank from")
    out = Path(out_dir)
    ts = list(range(1, seq.n_frames))

    def _one(t: int) -> LabeledPair:
        return generate_pair(seq, t, bank, cfg, derive_seed(cfg.seed, t))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            generated = list(ex.map(_one, ts))
    else:
        generated = [_one(t) for t in ts]

    pair_records = []
    for i, lp in enumerate(generated):
        rel = f"pairs/pair_{i:06d}"
        _write_labeled_pair(lp, out / rel)
        pair_records.append(
            {
                "index": i,
                "path": rel,
                "source_t": lp.pair.source_t,
                "seed": lp.seed,
                "n_events": len(lp.events),
            }
        )

    manifest = {
        "format_version": DATASET_FORMAT_VERSION,
        "width": seq.width,
        "height": seq.height,
        "sequence": seq.name,
        "config": asdict(cfg),
        "bank": {
            "crop_size": cfg.crop_size,
            "source_events": [
                {"t": c.source_event.t, "x": c.source_event.x, "y": c.source_event.y}
                for c in bank
            ],
        },
        "pairs": pair_records,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_manifest(dataset_dir: Path | str) -> dict:
    """Load and version-check a dataset manifest."""
    path = Path(dataset_dir) / "manifest.json"
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from exc
    version = manifest.get("format_version")
    if version != DATASET_FORMAT_VERSION:
        raise DataError(
            f"{path}: format_version {version!r} unsupported (need {DATASET_FORMAT_VERSION!r})"
        )
    return manifest


def read_pair_events(pair_dir: Path | str) -> dict:
    """Load one pair's events.json."""
    path = Path(pair_dir) / "events.json"
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or "source_t" not in doc or "events" not in doc:
        raise DataError(f"{path}: expected keys source_t and events")
    return doc


def dataset_events(dataset_dir: Path | str) -> list[MitosisEvent]:
    """All pasted events of a generated dataset as (source_t, x, y) events."""
    root = Path(dataset_dir)
    manifest = read_manifest(root)
    events: list[MitosisEvent] = []
    for record in manifest["pairs"]:
        doc = read_pair_events(root / record["path"])
        for ev in doc["events"]:
            events.append(MitosisEvent(t=doc["source_t"], x=float(ev["x"]), y=float(ev["y"])))
    return events


def sample_partial_labels(
    labels: AnnotationSet,
    *,
    n_shot: int | None = None,
    missing_rate: float | None = None,
    seed: int = 0,
) -> AnnotationSet:
    """Subsample an annotation set, deterministically in `seed`.

    Exactly one of the modes must be given. n_shot keeps min(n, N) events
    drawn uniformly without replacement (one choice() call over event
    indices, kept in original order); missing_rate drops each event
    independently with probability r (one uniform draw per event, in event
    order).
    """
    if (n_shot is None) == (missing_rate is None):
        raise ValueError("pass exactly one of n_shot or missing_rate")
    rng = make_rng(seed)
    events = labels.events
    if n_shot is not None:
        if n_shot < 1:
            raise ValueError("n_shot must be >= 1")
        m = min(n_shot, len(events))
        idx = sorted(int(i) for i in rng.choice(len(events), size=m, replace=False))
        kept = [events[i] for i in idx]
    else:
        if not 0.0 <= missing_rate <= 1.0:
            raise ValueError("missing_rate must lie in [0, 1]")
        u = rng.random(len(events))
        kept = [ev for ev, ui in zip(events, u) if ui >= missing_rate]
    return AnnotationSet(sequence_name=labels.sequence_name, events=kept)
