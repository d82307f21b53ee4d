"""Shared fixtures: simulated datasets and trained models are expensive, so
they are built once per session. The primary package (flipforge) is used
here only to produce datasets and to verify interop across the file-format
boundary; the trainer itself never imports it."""

import logging
from pathlib import Path

import pytest

logging.getLogger("flipforge.datagen").setLevel(logging.ERROR)

from flipforge.datagen import GenConfig, generate_dataset  # noqa: E402
from flipforge.imagecore import load_sequence, save_annotations, save_sequence  # noqa: E402
from flipforge.simulate import SimConfig, simulate  # noqa: E402

from flipforge_trainer.config import TrainConfig  # noqa: E402
from flipforge_trainer.training import train  # noqa: E402


@pytest.fixture(scope="session")
def workdir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("trainer")


@pytest.fixture(scope="session")
def train_dataset(workdir) -> Path:
    """20 generated pairs from a simulated, fully annotated sequence."""
    sim = SimConfig(
        width=128, height=128, n_frames=21, n_cells=12, division_rate=0.03, seed=0
    )
    seq, ann = simulate(sim)
    save_sequence(seq, workdir / "train_frames")
    seq_disk = load_sequence(workdir / "train_frames")
    generate_dataset(seq_disk, ann, GenConfig(seed=1), workdir / "dataset")
    return workdir / "dataset"


@pytest.fixture(scope="session")
def trained_model(workdir, train_dataset) -> Path:
    """Checkpoint from a default-config training run (30 epochs)."""
    out = workdir / "model"
    train(train_dataset, TrainConfig(), out)
    return out


@pytest.fixture(scope="session")
def held_out(workdir) -> tuple[Path, Path]:
    """A separately seeded simulated sequence with its ground truth file."""
    sim = SimConfig(
        width=128, height=128, n_frames=16, n_cells=12, division_rate=0.04, seed=42
    )
    seq, ann = simulate(sim)
    frames = workdir / "held_frames"
    save_sequence(seq, frames)
    gt = workdir / "held_gt.json"
    save_annotations(ann, gt)
    return frames, gt


@pytest.fixture(scope="session")
def memorization_model(workdir) -> tuple[Path, Path]:
    """5-pair dataset plus a checkpoint overfit on it without augmentation."""
    sim = SimConfig(
        width=128, height=128, n_frames=6, n_cells=12, division_rate=0.05, seed=3
    )
    seq, ann = simulate(sim)
    save_sequence(seq, workdir / "memo_frames")
    seq_disk = load_sequence(workdir / "memo_frames")
    dataset = workdir / "memo_dataset"
    generate_dataset(seq_disk, ann, GenConfig(seed=2), dataset)
    out = workdir / "memo_model"
    train(dataset, TrainConfig(epochs=150, augmentations=(), seed=0), out)
    return dataset, out
