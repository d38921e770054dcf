"""Stochastic matrices, permutations and eventually periodic chains.

A chain is presented as a finite ``prefix`` followed by a ``cycle`` that
repeats forever, so ``A(k) = prefix[k]`` for ``k < len(prefix)`` and
``cycle[(k - len(prefix)) % len(cycle)]`` afterwards.  Every infinite-sum
question about such a chain reduces to a finite computation over one period.

Permutations follow the row convention: ``Permutation.map[i]`` is the column
holding the single 1 of row ``i``.  Hence ``(P @ x)[i] = x[map[i]]`` and the
image of a set is ``P(S) = {i : map[i] in S}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, ContractError, InputError
from .indexset import IndexSet

TOL_STOCH = 1e-9
TOL_ZERO = 1e-12
MAX_DIM = 16

STOCHASTIC = "stochastic"
DOUBLY_STOCHASTIC = "doubly_stochastic"
FLAVORS = (STOCHASTIC, DOUBLY_STOCHASTIC)


def check_dim(dim: int, cap: int = MAX_DIM) -> None:
    if dim > cap:
        raise CapacityError(f"dimension {dim} exceeds cap {cap}", cap=cap)


# -- matrices ---------------------------------------------------------------

def as_stochastic(a, tol: float = TOL_STOCH, doubly: bool = False) -> np.ndarray:
    """Validate ``a`` as a (doubly) stochastic matrix.

    Entries in ``[-tol, 0)`` are clamped to zero.  The returned array is a
    read-only float64 copy.
    """
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InputError(f"expected a nonempty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix has non-finite entries")
    if arr.min() < -tol:
        raise InputError(f"negative entry {arr.min():.3g} below tolerance {tol:g}")
    arr[arr < 0] = 0.0
    if arr.max() > 1 + tol:
        raise InputError(f"entry {arr.max():.17g} exceeds 1")
    rows = arr.sum(axis=1)
    if np.max(np.abs(rows - 1)) > tol:
        i = int(np.argmax(np.abs(rows - 1)))
        raise InputError(f"row {i} sums to {rows[i]:.17g}, not 1 (tol {tol:g})")
    if doubly:
        cols = arr.sum(axis=0)
        if np.max(np.abs(cols - 1)) > tol:
            j = int(np.argmax(np.abs(cols - 1)))
            raise InputError(f"column {j} sums to {cols[j]:.17g}, not 1 (tol {tol:g})")
    arr.setflags(write=False)
    return arr


def is_doubly_stochastic(a, tol: float = TOL_STOCH) -> bool:
    a = np.asarray(a, dtype=float)
    return (
        a.min() >= -tol
        and np.max(np.abs(a.sum(axis=1) - 1)) <= tol
        and np.max(np.abs(a.sum(axis=0) - 1)) <= tol
    )


def uniform(m: int) -> np.ndarray:
    """The averaging matrix ``(1/m) e e^T``."""
    return np.full((m, m), 1.0 / m)


# -- permutations -----------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(j) for j in self.map))
        if sorted(self.map) != list(range(len(self.map))):
            raise ContractError(f"{list(self.map)} is not a bijection of [0, {len(self.map)})")

    @classmethod
    def identity(cls, dim: int) -> Permutation:
        return cls(tuple(range(dim)))

    @classmethod
    def from_matrix(cls, p, tol: float = TOL_STOCH) -> Permutation:
        p = np.asarray(p, dtype=float)
        cols = np.argmax(p, axis=1)
        perm = cls(tuple(cols))
        if np.max(np.abs(perm.matrix() - p)) > tol:
            raise ContractError("matrix is not a permutation matrix")
        return perm

    @property
    def dim(self) -> int:
        return len(self.map)

    def matrix(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        p[np.arange(self.dim), self.map] = 1.0
        return p

    def inverse(self) -> Permutation:
        """The transpose ``P^T``."""
        inv = [0] * self.dim
        for i, j in enumerate(self.map):
            inv[j] = i
        return Permutation(tuple(inv))

    def __matmul__(self, other: Permutation) -> Permutation:
        # row i of P @ Q is row map[i] of Q
        return Permutation(tuple(other.map[j] for j in self.map))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.map))

    def order(self) -> int:
        """Multiplicative order: the lcm of the cycle lengths."""
        seen = [False] * self.dim
        result = 1
        for start in range(self.dim):
            if seen[start]:
                continue
            length, j = 0, start
            while not seen[j]:
                seen[j] = True
                j = self.map[j]
                length += 1
            result = math.lcm(result, length)
        return result


def apply_perm_to_set(p: Permutation, s: IndexSet) -> IndexSet:
    """Image ``P(S) = {i : P[i, j] = 1 for some j in S}``."""
    if p.dim != s.dim:
        raise ContractError("permutation and set dimensions differ")
    mask = 0
    for i, j in enumerate(p.map):
        if s.mask >> j & 1:
            mask |= 1 << i
    return IndexSet(s.dim, mask)


# -- eventually periodic presentations ------------------------------------------

def periodic_index(k: int, prefix_len: int, cycle_len: int) -> tuple[bool, int]:
    """Locate term ``k``: ``(True, i)`` for ``prefix[i]``, ``(False, i)`` for ``cycle[i]``."""
    if k < 0:
        raise ContractError(f"index must be nonnegative, got {k}")
    if k < prefix_len:
        return True, k
    return False, (k - prefix_len) % cycle_len


def joint_period(*presentations) -> tuple[int, int]:
    """Start and length of a common period for several presentations.

    Each argument exposes ``prefix`` and ``cycle``; the returned ``(start,
    length)`` satisfies ``x(k + length) = x(k)`` for every argument and every
    ``k >= start``.
    """
    start = max(len(p.prefix) for p in presentations)
    length = 1
    for p in presentations:
        length = math.lcm(length, len(p.cycle))
    return start, length


class _Periodic:
    prefix: tuple
    cycle: tuple

    def at(self, k: int):
        in_prefix, i = periodic_index(k, len(self.prefix), len(self.cycle))
        return self.prefix[i] if in_prefix else self.cycle[i]


@dataclass(frozen=True, eq=False)
class Chain(_Periodic):
    """An eventually periodic stochastic chain ``{A(k)}``."""

    dim: int
    prefix: tuple[np.ndarray, ...]
    cycle: tuple[np.ndarray, ...]
    flavor: str = STOCHASTIC
    tol: float = field(default=TOL_STOCH, repr=False)

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise InputError(f"unknown flavor {self.flavor!r}; expected one of {FLAVORS}")
        if not self.cycle:
            raise InputError("chain cycle must be nonempty")
        doubly = self.flavor == DOUBLY_STOCHASTIC
        checked = []
        for part in (self.prefix, self.cycle):
            mats = tuple(as_stochastic(a, self.tol, doubly) for a in part)
            for a in mats:
                if a.shape[0] != self.dim:
                    raise InputError(f"matrix of size {a.shape[0]} in a chain of dim {self.dim}")
            checked.append(mats)
        object.__setattr__(self, "prefix", checked[0])
        object.__setattr__(self, "cycle", checked[1])

    @classmethod
    def static(cls, a, flavor: str = STOCHASTIC, tol: float = TOL_STOCH) -> Chain:
        a = np.asarray(a, dtype=float)
        return cls(a.shape[0], (), (a,), flavor, tol)

    @classmethod
    def periodic(cls, cycle: Sequence, prefix: Sequence = (), flavor: str = STOCHASTIC,
                 tol: float = TOL_STOCH) -> Chain:
        cycle = [np.asarray(a, dtype=float) for a in cycle]
        if not cycle:
            raise InputError("chain cycle must be nonempty")
        return cls(cycle[0].shape[0], tuple(prefix), tuple(cycle), flavor, tol)

    @property
    def is_doubly(self) -> bool:
        return self.flavor == DOUBLY_STOCHASTIC

    def matrices(self) -> Iterable[np.ndarray]:
        yield from self.prefix
        yield from self.cycle

    def with_flavor(self, flavor: str) -> Chain:
        return Chain(self.dim, self.prefix, self.cycle, flavor, self.tol)

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.flavor == other.flavor
            and len(self.prefix) == len(other.prefix)
            and len(self.cycle) == len(other.cycle)
            and all(np.array_equal(a, b) for a, b in zip(self.matrices(), other.matrices()))
        )

    __hash__ = None


@dataclass(frozen=True)
class PermChain(_Periodic):
    """An eventually periodic permutation chain ``{P(k)}``."""

    dim: int
    prefix: tuple[Permutation, ...]
    cycle: tuple[Permutation, ...]

    def __post_init__(self):
        if not self.cycle:
            raise InputError("permutation chain cycle must be nonempty")
        object.__setattr__(self, "prefix", tuple(_as_perm(p) for p in self.prefix))
        object.__setattr__(self, "cycle", tuple(_as_perm(p) for p in self.cycle))
        for p in self.prefix + self.cycle:
            if p.dim != self.dim:
                raise InputError(f"permutation of size {p.dim} in a chain of dim {self.dim}")

    @classmethod
    def static(cls, p) -> PermChain:
        p = _as_perm(p)
        return cls(p.dim, (), (p,))

    @classmethod
    def trivial(cls, dim: int) -> PermChain:
        return cls.static(Permutation.identity(dim))

    def is_trivial(self) -> bool:
        return all(p.is_identity() for p in self.prefix + self.cycle)

    def as_chain(self) -> Chain:
        return Chain(
            self.dim,
            tuple(p.matrix() for p in self.prefix),
            tuple(p.matrix() for p in self.cycle),
            DOUBLY_STOCHASTIC,
        )


def _as_perm(p) -> Permutation:
    return p if isinstance(p, Permutation) else Permutation(tuple(p))


def matrix_at(chain: Chain, k: int) -> np.ndarray:
    return chain.at(k)


def backward_product(chain: Chain, k: int, s: int) -> np.ndarray:
    """``A(k:s) = A(k-1) A(k-2) ... A(s)`` by iterated multiplication."""
    if not k > s >= 0:
        raise ContractError(f"backward product needs k > s >= 0, got k={k}, s={s}")
    result = np.array(chain.at(s))
    for t in range(s + 1, k):
        result = chain.at(t) @ result
    return result


def perm_product(pchain: PermChain, k: int) -> Permutation:
    """``P(k:0) = P(k-1) ... P(0)`` with ``P(0:0) = I``."""
    if k < 0:
        raise ContractError(f"k must be nonnegative, got {k}")
    result = Permutation.identity(pchain.dim)
    for t in range(k):
        result = pchain.at(t) @ result
    return result


def perm_products(pchain: PermChain, upto: int) -> list[Permutation]:
    """``[P(0:0), P(1:0), ..., P(upto:0)]`` in one pass."""
    out = [Permutation.identity(pchain.dim)]
    for t in range(upto):
        out.append(pchain.at(t) @ out[-1])
    return out


def perm_period(chain_like, pchain: PermChain, cap: int = 10**6) -> tuple[int, int]:
    """Common period of ``chain_like`` and the running products ``P(k:0)``.

    ``P(k:0)`` repeats once the product over one joint period returns to the
    identity, so the cycle length is the joint cycle length times the order of
    that one-period product.
    """
    start, length = joint_period(chain_like, pchain)
    one_period = Permutation.identity(pchain.dim)
    for t in range(start, start + length):
        one_period = pchain.at(t) @ one_period
    total = length * one_period.order()
    if total > cap:
        raise CapacityError(f"rotated period {total} exceeds cap {cap}", cap=cap)
    return start, total
