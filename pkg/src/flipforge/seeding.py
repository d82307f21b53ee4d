"""Deterministic seed derivation and RNG construction.

All randomness in the toolkit flows from explicit 64-bit seeds through
NumPy's PCG64 generator. Derived streams are keyed on the parent seed plus
integer labels via ``numpy.random.SeedSequence``, so unrelated consumers
(stages, cells, pairs) never share or perturb each other's streams. String
labels are folded to integers with CRC-32, which keeps the derivation
stable across runs and platforms.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(label: int | str) -> int:
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    if label < 0:
        raise ValueError(f"seed labels must be non-negative, got {label}")
    return int(label)


def derive_seed(seed: int, *labels: int | str) -> int:
    """Derive a child 64-bit seed from a parent seed and a label path."""
    key = [int(seed) & _MASK64] + [_label_key(l) for l in labels]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def make_rng(seed: int, *labels: int | str) -> np.random.Generator:
    """PCG64 generator for the stream identified by (seed, *labels)."""
    key = [int(seed) & _MASK64] + [_label_key(l) for l in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
