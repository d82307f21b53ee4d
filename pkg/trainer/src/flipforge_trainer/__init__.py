"""Toy-scale heatmap regression trainer for flipforge-dataset-v1 trees.

Reads and writes only the file formats the dataset toolkit defines (16-bit
grayscale frame PNGs, events.json / manifest.json, binary HMAP heatmaps);
every format reader and writer here is an independent implementation of
those contracts.
"""

__version__ = "0.1.0"

from .config import TrainConfig
from .inference import infer
from .training import train

__all__ = ["TrainConfig", "infer", "train", "__version__"]
