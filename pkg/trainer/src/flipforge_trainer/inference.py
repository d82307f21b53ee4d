"""Inference: one clamped heatmap per consecutive frame pair, in HMAP format."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .data import load_frames_dir
from .errors import DatasetFormatError, DimensionMismatchError
from .hmap import write_hmap
from .model import PairToHeatmapNet
from .training import CHECKPOINT_FORMAT


def load_checkpoint(path: Path | str) -> tuple[PairToHeatmapNet, int, int]:
    blob = torch.load(Path(path), map_location="cpu", weights_only=True)
    if not isinstance(blob, dict) or blob.get("format") != CHECKPOINT_FORMAT:
        raise DatasetFormatError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    model = PairToHeatmapNet()
    model.load_state_dict(blob["model_state"])
    model.eval()
    return model, int(blob["width"]), int(blob["height"])


def infer(checkpoint: Path | str, frames_dir: Path | str, out_dir: Path | str) -> int:
    """Write h%06d.hmap (+ source_t sidecar) for every pair (t-1, t).

    Heatmap index i corresponds to source_t = i + 1; values are clamped to
    [0, 1]. Returns the number of heatmaps written.
    """
    model, width, height = load_checkpoint(checkpoint)
    frames = load_frames_dir(frames_dir)
    if len(frames) < 2:
        raise DatasetFormatError(f"{frames_dir}: need at least 2 frames for pairs")
    if frames[0].shape != (height, width):
        raise DimensionMismatchError(
            f"frames are {frames[0].shape[1]}x{frames[0].shape[0]}, "
            f"checkpoint was trained on {width}x{height}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with torch.no_grad():
        for i in range(len(frames) - 1):
            source_t = i + 1
            x = torch.from_numpy(np.stack([frames[i], frames[i + 1]])[None])
            pred = model(x).squeeze(0).squeeze(0).clamp_(0.0, 1.0).numpy()
            write_hmap(pred.astype(np.float32), out / f"h{i:06d}.hmap")
            with open(out / f"h{i:06d}.json", "w", encoding="utf-8") as fh:
                json.dump({"source_t": source_t}, fh, indent=2, sort_keys=True)
                fh.write("\n")
    return len(frames) - 1
