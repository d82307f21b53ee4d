"""Training loop: MSE regression of rendered targets with Adam.

Deterministic mode seeds torch and the shuffling RNG and switches torch to
deterministic algorithms, so reruns log identical losses.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import TrainConfig
from .data import augment_sample, load_dataset, render_target
from .model import PairToHeatmapNet

CHECKPOINT_FORMAT = "flipforge-trainer-ckpt-v1"


def _make_batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def train(dataset_dir: Path | str, cfg: TrainConfig, out_dir: Path | str) -> Path:
    """Train on a generated dataset; writes checkpoint.pt and training_log.json.

    Returns the checkpoint path. The checkpoint records the training frame
    dimensions; inference enforces them.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.deterministic:
        torch.use_deterministic_algorithms(True)
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    samples = load_dataset(dataset_dir)
    _, height, width = samples[0].inputs.shape

    model = PairToHeatmapNet()
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.MSELoss()

    epoch_losses: list[float] = []
    model.train()
    for _epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        losses = []
        for batch_idx in _make_batches(order, cfg.batch_size):
            inputs, targets = [], []
            for i in batch_idx:
                arr, events = augment_sample(samples[i], cfg.augmentations, rng)
                _, h, w = arr.shape
                inputs.append(torch.from_numpy(arr))
                targets.append(torch.from_numpy(render_target(events, w, h, cfg.sigma)))
            x = torch.stack(inputs)
            y = torch.stack(targets).unsqueeze(1)
            optimizer.zero_grad()
            loss = loss_fn(model(x), y)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        epoch_losses.append(float(np.mean(losses)))

    ckpt_path = out / "checkpoint.pt"
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "model_state": model.state_dict(),
            "config": asdict(cfg),
            "width": width,
            "height": height,
        },
        ckpt_path,
    )
    log = {
        "config": asdict(cfg),
        "n_pairs": len(samples),
        "epoch_losses": epoch_losses,
    }
    with open(out / "training_log.json", "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ckpt_path
