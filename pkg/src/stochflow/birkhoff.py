"""Birkhoff decomposition, permutation components and rotated chains."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import (
    TOL_ZERO,
    Chain,
    Permutation,
    PermChain,
    backward_product,
    joint_period,
    perm_period,
    perm_product,
    perm_products,
)
from .errors import ContractError, InputError

RECONSTRUCTION_TOL = 1e-10


# -- bipartite matching -----------------------------------------------------

def perfect_matching(support: np.ndarray) -> list[int] | None:
    """Row-to-column perfect matching on a boolean support, or ``None``.

    Augmenting paths (Kuhn's algorithm); ``O(m^3)`` for an ``m x m`` support.
    """
    m = support.shape[0]
    adj = [np.flatnonzero(support[i]).tolist() for i in range(m)]
    owner = [-1] * m

    def augment(i, visited):
        for j in adj[i]:
            if not visited[j]:
                visited[j] = True
                if owner[j] < 0 or augment(owner[j], visited):
                    owner[j] = i
                    return True
        return False

    for i in range(m):
        if not augment(i, [False] * m):
            return None
    match = [0] * m
    for j, i in enumerate(owner):
        match[i] = j
    return match


def lexmin_matching(support: np.ndarray) -> list[int] | None:
    """Lexicographically smallest perfect matching (row by row)."""
    m = support.shape[0]
    if perfect_matching(support) is None:
        return None
    allowed = support.copy()
    match = []
    for i in range(m):
        for j in np.flatnonzero(allowed[i]):
            trial = allowed.copy()
            trial[i, :] = False
            trial[:, j] = False
            trial[i, j] = True
            if perfect_matching(trial) is not None:
                allowed = trial
                match.append(int(j))
                break
    return match


def bottleneck_matching(a: np.ndarray, tol_zero: float = TOL_ZERO) -> tuple[float, list[int]] | None:
    """Maximise ``min_i a[i, p(i)]`` over permutations ``p``.

    Binary search over the distinct entries above ``tol_zero`` with a
    feasibility matching per threshold.  Ties go to the lexicographically
    smallest map.  ``None`` when no permutation avoids entries ``<= tol_zero``.
    """
    values = np.unique(a[a > tol_zero])
    if values.size == 0 or perfect_matching(a >= values[0]) is None:
        return None
    lo, hi = 0, values.size - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if perfect_matching(a >= values[mid]) is not None:
            lo = mid
        else:
            hi = mid - 1
    match = lexmin_matching(a >= values[lo])
    return float(values[lo]), match


# -- Birkhoff decomposition ---------------------------------------------------

class BirkhoffTerm(NamedTuple):
    weight: float
    perm: Permutation


@dataclass(frozen=True)
class BirkhoffDecomp:
    terms: tuple[BirkhoffTerm, ...]
    residual: float

    def reconstruct(self) -> np.ndarray:
        return sum(t.weight * t.perm.matrix() for t in self.terms)

    @property
    def weight_sum(self) -> float:
        return float(sum(t.weight for t in self.terms))


def birkhoff_decompose(a, tol_zero: float = TOL_ZERO,
                       tol: float = RECONSTRUCTION_TOL) -> BirkhoffDecomp:
    """Write a doubly stochastic matrix as a convex combination of permutations.

    Greedy peeling: take a perfect matching of the remaining support (the
    bottleneck one, which peels the largest possible weight), subtract its
    smallest entry times the permutation, repeat.  Each step removes at least
    one support entry and moves to a lower-dimensional face of the Birkhoff
    polytope, so at most ``(m-1)^2 + 1`` terms are produced.
    """
    rest = np.array(a, dtype=float)
    m = rest.shape[0]
    if rest.shape != (m, m):
        raise ContractError("Birkhoff decomposition needs a square matrix")
    rows = np.arange(m)
    terms = []
    while rest.max() > tol_zero:
        found = bottleneck_matching(rest, tol_zero)
        if found is None:
            if rest.max() <= tol:
                break
            raise InputError(
                f"no perfect matching with residual {rest.max():.3g}; "
                "matrix is not doubly stochastic within tolerance")
        weight, match = found
        cols = np.array(match)
        rest[rows, cols] -= weight
        hit = rest[rows, cols] <= tol_zero
        rest[rows[hit], cols[hit]] = 0.0
        terms.append(BirkhoffTerm(weight, Permutation(tuple(match))))
    np.clip(rest, 0.0, None, out=rest)
    return BirkhoffDecomp(tuple(terms), float(rest.max()))


# -- permutation components ---------------------------------------------------

def max_mixing_permutation(a, tol_zero: float = TOL_ZERO) -> tuple[float, Permutation] | None:
    """Permutation with the largest smallest entry, and that entry as ``gamma``.

    Returns ``None`` when every permutation meets an entry ``<= tol_zero``,
    i.e. the matrix cannot be split as ``gamma P + (1 - gamma) R``.
    """
    found = bottleneck_matching(np.asarray(a, dtype=float), tol_zero)
    if found is None:
        return None
    gamma, match = found
    return gamma, Permutation(tuple(match))


@dataclass(frozen=True)
class PermComponent:
    """``A(k) = gamma P(k) + (1 - gamma) R(k)`` with ``R`` stochastic.

    ``degenerate`` marks a pure permutation chain (``gamma = 1``); its
    residual chain is the identity by convention.
    """

    gamma: float
    pchain: PermChain
    residual_chain: Chain
    degenerate: bool = False


def decompose_chain(chain: Chain, tol_zero: float = TOL_ZERO) -> PermComponent | None:
    """Permutation component and uniform mixing coefficient, or ``None``.

    Every matrix gets its bottleneck permutation; ``gamma`` is the smallest
    bottleneck value over the presentation.
    """
    picks = []
    for a in chain.matrices():
        found = max_mixing_permutation(a, tol_zero)
        if found is None:
            return None
        picks.append(found)
    gamma = min(g for g, _ in picks)
    perms = [p for _, p in picks]
    npre = len(chain.prefix)
    pchain = PermChain(chain.dim, tuple(perms[:npre]), tuple(perms[npre:]))
    if 1.0 - gamma <= tol_zero:
        eye = np.eye(chain.dim)
        residual = Chain(chain.dim, (eye,) * npre, (eye,) * len(chain.cycle), chain.flavor)
        return PermComponent(1.0, pchain, residual, degenerate=True)
    rest = [(a - gamma * p.matrix()) / (1.0 - gamma) for a, p in zip(chain.matrices(), perms)]
    tol = max(chain.tol, 1e-13 / (1.0 - gamma))
    residual = Chain(chain.dim, tuple(rest[:npre]), tuple(rest[npre:]), chain.flavor, tol)
    return PermComponent(gamma, pchain, residual)


def component_for(chain: Chain, pchain: PermChain, tol_zero: float = TOL_ZERO) -> PermComponent | None:
    """Split ``chain`` along a given permutation chain, or ``None`` if it is not a component.

    ``gamma`` is the smallest entry ``A(k)[i, P(k)(i)]`` over one joint period.
    """
    if chain.dim != pchain.dim:
        raise ContractError("chain and permutation chain dimensions differ")
    start, length = joint_period(chain, pchain)
    rows = np.arange(chain.dim)
    mats = [chain.at(k) for k in range(start + length)]
    perms = [pchain.at(k) for k in range(start + length)]
    gamma = min(float(a[rows, list(p.map)].min()) for a, p in zip(mats, perms))
    if gamma <= tol_zero:
        return None
    pre = PermChain(chain.dim, tuple(perms[:start]), tuple(perms[start:]))
    if 1.0 - gamma <= tol_zero:
        eye = np.eye(chain.dim)
        residual = Chain(chain.dim, (eye,) * start, (eye,) * length, chain.flavor)
        return PermComponent(1.0, pre, residual, degenerate=True)
    rest = [(a - gamma * p.matrix()) / (1.0 - gamma) for a, p in zip(mats, perms)]
    tol = max(chain.tol, 1e-13 / (1.0 - gamma))
    residual = Chain(chain.dim, tuple(rest[:start]), tuple(rest[start:]), chain.flavor, tol)
    return PermComponent(gamma, pre, residual)


# -- rotational transformation --------------------------------------------------

def rotate_matrix(a: np.ndarray, after: Permutation, before: Permutation) -> np.ndarray:
    """``after^T @ a @ before`` by index gathering (exact, no arithmetic)."""
    return np.asarray(a)[np.ix_(after.inverse().map, before.inverse().map)]


def rotate_chain(chain: Chain, pchain: PermChain, cap: int = 10**6) -> Chain:
    """The chain ``B(k) = P(k+1:0)^T A(k) P(k:0)`` in prefix + cycle form."""
    if chain.dim != pchain.dim:
        raise ContractError("chain and permutation chain dimensions differ")
    start, length = perm_period(chain, pchain, cap)
    prods = perm_products(pchain, start + length)
    rotated = [rotate_matrix(chain.at(k), prods[k + 1], prods[k]) for k in range(start + length)]
    cycle = rotated[start:]
    for d in range(1, length + 1):
        if length % d == 0 and all(np.array_equal(cycle[i], cycle[i % d]) for i in range(length)):
            cycle = cycle[:d]
            break
    return Chain(chain.dim, tuple(rotated[:start]), tuple(cycle), chain.flavor, chain.tol)


def rotated_product_identity_check(chain: Chain, pchain: PermChain, k: int, s: int,
                                   tol: float = RECONSTRUCTION_TOL) -> bool:
    """Compare ``B(k:s)`` with ``P(k:0)^T A(k:s) P(s:0)`` entrywise."""
    if not k > s >= 0:
        raise ContractError(f"identity check needs k > s >= 0, got k={k}, s={s}")
    lhs = backward_product(rotate_chain(chain, pchain), k, s)
    pk = perm_product(pchain, k).matrix()
    ps = perm_product(pchain, s).matrix()
    rhs = pk.T @ backward_product(chain, k, s) @ ps
    return bool(np.max(np.abs(lhs - rhs)) <= tol)
