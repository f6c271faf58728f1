"""Deterministic quantizers as label arrays, and conversions to/from boundary sets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class Assignment:
    """A deterministic quantizer: output j is mapped to label ``labels[j]`` in [0, M)."""

    labels: np.ndarray
    M: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.intp)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if labels.size and (labels.min() < 0 or labels.max() >= self.M):
            raise ValueError(f"labels must lie in [0, {self.M})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_boundaries(cls, boundaries: Sequence[int]) -> "Assignment":
        """SDQ with cells (b[k-1], b[k]] in 1-based output indices."""
        b = np.asarray(boundaries)
        labels = np.repeat(np.arange(b.size - 1), np.diff(b))
        return cls(labels, b.size - 1)

    @classmethod
    def identity(cls, n: int) -> "Assignment":
        return cls(np.arange(n), n)

    @property
    def n(self) -> int:
        return self.labels.size

    def is_surjective(self) -> bool:
        return np.unique(self.labels).size == self.M

    def preimages(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == z) for z in range(self.M)]

    def aggregate(self, joint: np.ndarray) -> np.ndarray:
        """q x M matrix of P(x, z) from the q x n joint P(x, y)."""
        out = np.zeros((joint.shape[0], self.M))
        np.add.at(out.T, self.labels, joint.T)
        return out

    def is_sequential(self) -> bool:
        """Every preimage is a contiguous run, in increasing label order."""
        return bool(np.all(np.diff(self.labels) >= 0)) and self.is_surjective()

    def boundaries(self) -> tuple[int, ...]:
        if not self.is_sequential():
            raise ValueError("assignment is not sequential")
        counts = np.bincount(self.labels, minlength=self.M)
        return (0, *np.cumsum(counts).tolist())

    def canonical(self) -> "Assignment":
        """Relabel so labels appear in order of their smallest member."""
        _, first = np.unique(self.labels, return_index=True)
        order = np.argsort(first, kind="stable")
        remap = np.empty(self.M, dtype=np.intp)
        remap[np.unique(self.labels)[order]] = np.arange(order.size)
        return Assignment(remap[self.labels], self.M)

    def same_partition(self, other: "Assignment") -> bool:
        return self.M == other.M and bool(np.array_equal(self.canonical().labels, other.canonical().labels))

    def __repr__(self):
        return f"Assignment(M={self.M}, labels={self.labels.tolist()})"
