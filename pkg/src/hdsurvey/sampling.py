"""Balanced undersampling and stratified train/test splits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import InfeasibleError, InputError
from .rng import make_rng

DEFAULT_TEST_FRACTION = 0.3


@dataclass(frozen=True)
class SampleSpec:
    n_per_class: int
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 0:
            raise InputError("n_per_class must be >= 0")


def balanced_sample_indices(labels: np.ndarray, spec: SampleSpec) -> np.ndarray:
    """Source-row indices of a balanced draw, in shuffled order."""
    rng = make_rng(spec.seed)
    picked = []
    for cls, name in ((0, "negative"), (1, "positive")):
        members = np.flatnonzero(labels == cls)
        if members.size < spec.n_per_class:
            raise InfeasibleError(
                f"{name} class has only {members.size} rows, cannot draw {spec.n_per_class} per class"
            )
        picked.append(rng.choice(members, size=spec.n_per_class, replace=False))
    rows = np.concatenate(picked)
    return rows[rng.permutation(rows.size)]


def balanced_sample(d: Dataset, spec: SampleSpec) -> Dataset:
    """Exactly ``spec.n_per_class`` rows of each class, drawn without replacement."""
    return d.take(balanced_sample_indices(d.labels, spec))


def split_indices(labels: np.ndarray, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise InputError("test_fraction must lie strictly between 0 and 1")
    rng = make_rng(seed)
    train, test = [], []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise InfeasibleError(f"class {cls} has {members.size} rows; a stratified split needs at least 2")
        members = members[rng.permutation(members.size)]
        n_test = int(round(test_fraction * members.size))
        if n_test == 0 or n_test == members.size:
            side = "test" if n_test == 0 else "train"
            raise InputError(f"test_fraction {test_fraction} leaves the {side} side of class {cls} empty")
        test.append(members[:n_test])
        train.append(members[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def train_test_split(d: Dataset, test_fraction: float = DEFAULT_TEST_FRACTION,
                     seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified split; each class contributes ``round(test_fraction * size)`` test rows."""
    train, test = split_indices(d.labels, test_fraction, seed)
    return d.take(train), d.take(test)

