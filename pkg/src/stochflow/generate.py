"""Seeded random instances for property checks."""

from __future__ import annotations

import numpy as np

from .chain import (
    DOUBLY_STOCHASTIC,
    STOCHASTIC,
    Chain,
    Permutation,
    PermChain,
    perm_period,
    perm_products,
)


def random_permutation(rng: np.random.Generator, m: int) -> Permutation:
    return Permutation(tuple(int(j) for j in rng.permutation(m)))


def random_doubly_stochastic(rng: np.random.Generator, m: int, terms: int | None = None) -> np.ndarray:
    """Random convex combination of ``terms`` random permutation matrices.

    ``terms`` defaults to a uniform draw from ``1 .. m*m``.
    """
    if terms is None:
        terms = int(rng.integers(1, m * m + 1))
    weights = rng.dirichlet(np.ones(terms))
    a = sum(w * random_permutation(rng, m).matrix() for w in weights)
    return a / weights.sum()


def random_stochastic(rng: np.random.Generator, m: int, density: float = 0.6) -> np.ndarray:
    mask = rng.random((m, m)) < density
    mask[np.arange(m), rng.integers(0, m, size=m)] = True
    a = rng.random((m, m)) * mask
    return a / a.sum(axis=1, keepdims=True)


def random_chain(rng: np.random.Generator, m: int, doubly: bool = True,
                 max_prefix: int = 2, max_cycle: int = 3, terms: int | None = None,
                 density: float = 0.6) -> Chain:
    npre = int(rng.integers(0, max_prefix + 1))
    ncyc = int(rng.integers(1, max_cycle + 1))
    if doubly:
        mats = [random_doubly_stochastic(rng, m, terms) for _ in range(npre + ncyc)]
    else:
        mats = [random_stochastic(rng, m, density) for _ in range(npre + ncyc)]
    flavor = DOUBLY_STOCHASTIC if doubly else STOCHASTIC
    return Chain(m, tuple(mats[:npre]), tuple(mats[npre:]), flavor)


def random_perm_chain(rng: np.random.Generator, m: int, max_prefix: int = 2,
                      max_cycle: int = 3) -> PermChain:
    npre = int(rng.integers(0, max_prefix + 1))
    ncyc = int(rng.integers(1, max_cycle + 1))
    perms = [random_permutation(rng, m) for _ in range(npre + ncyc)]
    return PermChain(m, tuple(perms[:npre]), tuple(perms[npre:]))


def block_diagonal(*blocks) -> np.ndarray:
    size = sum(np.shape(b)[0] for b in blocks)
    out = np.zeros((size, size))
    at = 0
    for b in blocks:
        b = np.asarray(b, dtype=float)
        n = b.shape[0]
        out[at:at + n, at:at + n] = b
        at += n
    return out


def unrotate(chain: Chain, pchain: PermChain) -> Chain:
    """The chain ``A`` whose rotation by ``pchain`` is ``chain``.

    ``A(k) = P(k+1:0) B(k) P(k:0)^T``; if ``B`` has a dominant diagonal then
    ``pchain`` is a permutation component of ``A``.
    """
    start, length = perm_period(chain, pchain)
    prods = perm_products(pchain, start + length)
    mats = [prods[k + 1].matrix() @ chain.at(k) @ prods[k].matrix().T for k in range(start + length)]
    return Chain(chain.dim, tuple(mats[:start]), tuple(mats[start:]), chain.flavor)
