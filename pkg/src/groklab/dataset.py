"""Modular-addition data: pair generation, symmetry filters, one-hot encoding, splits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateDatasetError(ValueError):
    """Filtering or splitting left nothing to train or test on."""


@dataclass(frozen=True)
class SymmetryFilter:
    require_j_ge_i: bool = False
    require_i_gt_j: bool = False
    # plain j - i values, no modular wraparound
    excluded_differences: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.require_j_ge_i and self.require_i_gt_j:
            raise ValueError("require_j_ge_i and require_i_gt_j are mutually exclusive")
        object.__setattr__(self, "excluded_differences",
                           frozenset(int(d) for d in self.excluded_differences))

    def accepts(self, i: int, j: int) -> bool:
        if self.require_j_ge_i and j < i:
            return False
        if self.require_i_gt_j and not i > j:
            return False
        return (j - i) not in self.excluded_differences

    def to_dict(self) -> dict:
        return {
            "require_j_ge_i": self.require_j_ge_i,
            "require_i_gt_j": self.require_i_gt_j,
            "excluded_differences": sorted(self.excluded_differences),
        }

    @classmethod
    def from_dict(cls, d: dict) -> SymmetryFilter:
        return cls(
            require_j_ge_i=bool(d.get("require_j_ge_i", False)),
            require_i_gt_j=bool(d.get("require_i_gt_j", False)),
            excluded_differences=frozenset(d.get("excluded_differences", ())),
        )


@dataclass(frozen=True)
class DatasetSpec:
    modulus: int
    train_frac: float
    filter: SymmetryFilter = field(default_factory=SymmetryFilter)
    seed: int = 0

    def __post_init__(self):
        if int(self.modulus) != self.modulus or self.modulus < 2:
            raise ValueError(f"modulus must be an integer >= 2, got {self.modulus!r}")
        if not 0.0 < self.train_frac <= 1.0:
            raise ValueError(f"train_frac must lie in (0, 1], got {self.train_frac!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


class EncodedDataset:
    """Samples stored as ``(i, j)`` index arrays; the dense one-hot matrix is built on demand.

    The training loop only needs the indices (the first layer reduces to a
    column gather), so ``inputs`` is materialized lazily.
    """

    def __init__(self, i: np.ndarray, j: np.ndarray, modulus: int):
        self.i = np.ascontiguousarray(i, dtype=np.int64)
        self.j = np.ascontiguousarray(j, dtype=np.int64)
        self.modulus = int(modulus)
        self.labels = (self.i + self.j) % self.modulus
        self._inputs = None

    def __len__(self) -> int:
        return len(self.i)

    @property
    def pair_index(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))

    @property
    def inputs(self) -> np.ndarray:
        if self._inputs is None:
            x = np.zeros((len(self), 2 * self.modulus), dtype=np.float64)
            rows = np.arange(len(self))
            x[rows, self.i] = 1.0
            x[rows, self.modulus + self.j] = 1.0
            self._inputs = x
        return self._inputs


def generate_pairs(spec: DatasetSpec) -> list[tuple[int, int, int]]:
    """All ``(i, j, (i + j) mod P)`` passing the filter, row-major in ``i`` then ``j``."""
    p = spec.modulus
    pairs = [(i, j, (i + j) % p) for i in range(p) for j in range(p) if spec.filter.accepts(i, j)]
    if not pairs:
        raise DegenerateDatasetError("degenerate dataset: no pairs survive the filter")
    return pairs


def encode_one_hot(i: int, j: int, p: int) -> np.ndarray:
    if not (0 <= i < p and 0 <= j < p):
        raise ValueError(f"indices ({i}, {j}) out of range for P={p}")
    x = np.zeros(2 * p, dtype=np.float64)
    x[i] = 1.0
    x[p + j] = 1.0
    return x


def split(pairs, train_frac: float, seed: int, p: int | None = None,
          require_both: bool = False) -> tuple[EncodedDataset, EncodedDataset]:
    """Seeded shuffle, then the first ``floor(train_frac * n)`` samples train.

    ``p`` defaults to one more than the largest index present; pass it
    explicitly whenever a filter could hide the top residue.
    """
    if not pairs:
        raise DegenerateDatasetError("degenerate dataset: nothing to split")
    arr = np.asarray([(i, j) for i, j, *_ in pairs], dtype=np.int64)
    if p is None:
        p = int(arr.max()) + 1
    n = len(arr)
    # guard against 0.29 * 100 == 28.999...
    n_train = int(np.floor(train_frac * n + 1e-9))
    order = np.random.default_rng(seed).permutation(n)
    train_rows, test_rows = order[:n_train], order[n_train:]
    if require_both and (len(train_rows) == 0 or len(test_rows) == 0):
        raise DegenerateDatasetError(
            f"degenerate split: {len(train_rows)} train / {len(test_rows)} test")
    return (EncodedDataset(arr[train_rows, 0], arr[train_rows, 1], p),
            EncodedDataset(arr[test_rows, 0], arr[test_rows, 1], p))


def build(spec: DatasetSpec, require_both: bool = False) -> tuple[EncodedDataset, EncodedDataset]:
    return split(generate_pairs(spec), spec.train_frac, spec.seed, p=spec.modulus,
                 require_both=require_both)
