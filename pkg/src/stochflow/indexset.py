"""Subsets of ``{0, ..., m-1}`` stored as bitmasks."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

from .errors import ContractError


@dataclass(frozen=True, order=True)
class IndexSet:
    """A subset of ``[m]`` (0-based) encoded as an integer bitmask."""

    dim: int
    mask: int

    def __post_init__(self):
        if self.dim < 1:
            raise ContractError(f"dimension must be positive, got {self.dim}")
        if self.mask < 0 or self.mask >> self.dim:
            raise ContractError(f"mask {self.mask:#x} has bits outside [0, {self.dim})")

    @classmethod
    def of(cls, dim: int, members: Iterable[int]) -> IndexSet:
        mask = 0
        for i in members:
            i = int(i)
            if not 0 <= i < dim:
                raise ContractError(f"index {i} outside [0, {dim})")
            mask |= 1 << i
        return cls(dim, mask)

    @classmethod
    def full(cls, dim: int) -> IndexSet:
        return cls(dim, (1 << dim) - 1)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dim) if self.mask >> i & 1)

    def complement(self) -> IndexSet:
        return IndexSet(self.dim, ~self.mask & ((1 << self.dim) - 1))

    def is_nontrivial(self) -> bool:
        return 0 < self.mask < (1 << self.dim) - 1

    def indicator(self) -> np.ndarray:
        return np.array([self.mask >> i & 1 for i in range(self.dim)], dtype=float)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __contains__(self, i) -> bool:
        return 0 <= i < self.dim and bool(self.mask >> i & 1)

    def __repr__(self) -> str:
        return f"IndexSet({self.dim}, {set(self.members) or '{}'})"


def require_nontrivial(s: IndexSet) -> None:
    if not s.is_nontrivial():
        raise ContractError(f"{s!r} must be nonempty and proper")


def nontrivial_masks(dim: int) -> np.ndarray:
    """All masks ``1 .. 2**dim - 2`` in increasing order."""
    return np.arange(1, (1 << dim) - 1, dtype=np.int64)


def masks_of_size(dim: int, size: int) -> np.ndarray:
    """Masks with exactly ``size`` bits set, in increasing order."""
    masks = [sum(1 << i for i in c) for c in combinations(range(dim), size)]
    return np.array(sorted(masks), dtype=np.int64)


def indicator_rows(masks: np.ndarray, dim: int) -> np.ndarray:
    """0/1 matrix whose row ``r`` is the indicator of ``masks[r]``."""
    bits = np.arange(dim, dtype=np.int64)
    return ((np.asarray(masks, dtype=np.int64)[:, None] >> bits) & 1).astype(float)
