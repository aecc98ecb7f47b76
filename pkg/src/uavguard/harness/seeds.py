"""Deterministic seed derivation: every stage stream comes from the one root
seed plus a label, so stages are independently reproducible."""

from __future__ import annotations

import numpy as np


def seed_sequence(root: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(root, spawn_key=tuple(label.encode("utf-8")))


def stream(root: int, label: str) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(root, label))


def derive_seed(root: int, label: str) -> int:
    """A 31-bit integer seed for components that take plain ints."""
    return int(seed_sequence(root, label).generate_state(1)[0] % (2**31))
