import logging
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

# crop-bank border skips are expected in fixtures; keep test output clean
logging.getLogger("flipforge.datagen").setLevel(logging.ERROR)

from flipforge.imagecore import Frame, Sequence  # noqa: E402


def make_sequence(n_frames: int, width: int = 64, height: int = 64, fill=None, name="seq"):
    """Sequence of constant or per-frame-filled frames."""
    frames = []
    for t in range(n_frames):
        value = fill(t) if callable(fill) else (fill if fill is not None else 0.0)
        frames.append(Frame(t=t, pixels=np.full((height, width), value, dtype=np.float64)))
    return Sequence(name=name, frames=frames)


def random_sequence(rng: np.random.Generator, n_frames: int, width=64, height=64, name="rand"):
    frames = [
        Frame(t=t, pixels=rng.random((height, width))) for t in range(n_frames)
    ]
    return Sequence(name=name, frames=frames)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
