import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochflow.birkhoff import (
    birkhoff_decompose,
    bottleneck_matching,
    component_for,
    decompose_chain,
    lexmin_matching,
    max_mixing_permutation,
    perfect_matching,
    rotate_chain,
    rotate_matrix,
    rotated_product_identity_check,
)
from stochflow.chain import (
    DOUBLY_STOCHASTIC,
    Chain,
    PermChain,
    Permutation,
    perm_period,
    uniform,
)
from stochflow.errors import InputError
from stochflow.flow import has_absolute_infinite_flow, set_flow, step_flow, trajectory
from stochflow.generate import (
    random_chain,
    random_doubly_stochastic,
    random_perm_chain,
    random_stochastic,
)
from stochflow.indexset import IndexSet

from conftest import QUARTER, SWAP


def brute_bottleneck(a):
    m = a.shape[0]
    return max(min(a[i, p[i]] for i in range(m)) for p in itertools.permutations(range(m)))


def test_perfect_matching_basics():
    assert perfect_matching(np.eye(3, dtype=bool)) == [0, 1, 2]
    assert perfect_matching(np.array([[1, 1], [1, 0]], dtype=bool)) == [1, 0]
    assert perfect_matching(np.array([[1, 1], [0, 0]], dtype=bool)) is None


def test_lexmin_matching_prefers_small_maps():
    assert lexmin_matching(np.ones((3, 3), dtype=bool)) == [0, 1, 2]
    support = np.array([[0, 1, 1], [1, 1, 0], [1, 0, 1]], dtype=bool)
    assert lexmin_matching(support) == [1, 0, 2]


def test_birkhoff_uniform():
    dec = birkhoff_decompose(uniform(3))
    assert np.max(np.abs(dec.reconstruct() - uniform(3))) <= 1e-10
    assert dec.weight_sum == pytest.approx(1.0, abs=1e-10)
    assert len(dec.terms) <= 5


def test_birkhoff_permutation_matrix():
    p = Permutation((2, 0, 3, 1))
    dec = birkhoff_decompose(p.matrix())
    assert len(dec.terms) == 1
    assert dec.terms[0].weight == 1.0 and dec.terms[0].perm == p


def test_birkhoff_two_by_two():
    dec = birkhoff_decompose(QUARTER)
    got = sorted((t.weight, t.perm.map) for t in dec.terms)
    assert got == [(0.25, (0, 1)), (0.75, (1, 0))]


def test_birkhoff_rejects_non_doubly():
    with pytest.raises(InputError):
        birkhoff_decompose(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_max_mixing_examples():
    assert max_mixing_permutation(np.array([[1.0, 0.0], [1.0, 0.0]])) is None
    gamma, p = max_mixing_permutation(np.eye(3))
    assert gamma == 1.0 and p.is_identity()
    gamma, p = max_mixing_permutation(QUARTER)
    assert gamma == 0.75 and p.map == (1, 0)


def test_decompose_chain_examples(rng):
    assert decompose_chain(Chain.static(np.array([[1.0, 0.0], [1.0, 0.0]]))) is None
    lazy = [0.3 * np.eye(4) + 0.7 * random_doubly_stochastic(rng, 4) for _ in range(3)]
    chain = Chain.periodic(lazy, flavor=DOUBLY_STOCHASTIC)
    assert decompose_chain(chain).gamma >= 0.3
    trivial = component_for(chain, PermChain.trivial(4))
    assert trivial.pchain.is_trivial() and trivial.gamma >= 0.3
    # With every diagonal entry above 1/2 the identity is the bottleneck choice.
    lazier = [0.55 * np.eye(4) + 0.45 * random_doubly_stochastic(rng, 4) for _ in range(3)]
    pcomp = decompose_chain(Chain.periodic(lazier, flavor=DOUBLY_STOCHASTIC))
    assert pcomp.pchain.is_trivial() and pcomp.gamma >= 0.55


def test_component_for():
    chain = Chain.periodic([QUARTER, SWAP], flavor=DOUBLY_STOCHASTIC)
    assert component_for(chain, PermChain.trivial(2)) is None
    pcomp = component_for(chain, PermChain.static((1, 0)))
    assert pcomp.gamma == 0.75
    for k in range(2):
        recon = 0.75 * SWAP + 0.25 * pcomp.residual_chain.at(k)
        assert np.allclose(recon, chain.at(k), atol=1e-15)


def test_decompose_pure_permutation_chain_is_degenerate():
    chain = PermChain(3, (Permutation((1, 0, 2)),), (Permutation((2, 0, 1)),)).as_chain()
    pcomp = decompose_chain(chain)
    assert pcomp.degenerate and pcomp.gamma == 1.0
    assert all(np.array_equal(r, np.eye(3)) for r in pcomp.residual_chain.matrices())
    assert pcomp.pchain.prefix[0].map == (1, 0, 2)


@given(st.integers(0, 2**32 - 1))
def test_bottleneck_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    a = random_stochastic(rng, m, density=float(rng.uniform(0.3, 1.0)))
    if rng.integers(2):
        a = np.round(a, 1)  # ties
    found = bottleneck_matching(a)
    best = brute_bottleneck(a)
    if best <= 1e-12:
        assert found is None
    else:
        gamma, match = found
        assert gamma == best
        assert min(a[i, match[i]] for i in range(m)) == gamma
        optimal = [p for p in itertools.permutations(range(m))
                   if min(a[i, p[i]] for i in range(m)) == best]
        assert tuple(match) == min(optimal)


@given(st.integers(0, 2**32 - 1))
def test_birkhoff_invariants(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    a = random_doubly_stochastic(rng, m)
    dec = birkhoff_decompose(a)
    assert np.max(np.abs(dec.reconstruct() - a)) <= 1e-10
    assert abs(dec.weight_sum - 1.0) <= 1e-10
    assert len(dec.terms) <= (m - 1) ** 2 + 1
    assert all(0 < t.weight <= 1 for t in dec.terms)
    assert max_mixing_permutation(a)[0] >= 1 / math.factorial(m)


@given(st.integers(0, 2**32 - 1))
def test_decompose_chain_reconstructs(seed):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng, int(rng.integers(2, 7)), doubly=bool(rng.integers(2)))
    pcomp = decompose_chain(chain)
    if pcomp is None:
        return
    assert 0 < pcomp.gamma <= 1
    for k in range(len(chain.prefix) + len(chain.cycle)):
        a, p, r = chain.at(k), pcomp.pchain.at(k).matrix(), pcomp.residual_chain.at(k)
        assert np.max(np.abs(pcomp.gamma * p + (1 - pcomp.gamma) * r - a)) <= 1e-10
        assert r.min() >= 0 and np.allclose(r.sum(axis=1), 1, atol=1e-9)


def test_rotate_matrix_matches_matrix_products(rng):
    a = random_stochastic(rng, 5)
    p, q = Permutation((3, 0, 4, 1, 2)), Permutation((1, 2, 0, 4, 3))
    assert np.array_equal(rotate_matrix(a, p, q), p.matrix().T @ a @ q.matrix())


def test_rotate_by_trivial_chain_is_identity_map(rng):
    chain = random_chain(rng, 4)
    assert rotate_chain(chain, PermChain.trivial(4)) == chain


def test_rotate_swap_by_itself_gives_identity():
    chain = Chain.static(SWAP, DOUBLY_STOCHASTIC)
    rotated = rotate_chain(chain, PermChain.static((1, 0)))
    for k in range(4):
        assert np.array_equal(rotated.at(k), np.eye(2))


def test_rotate_by_component_gives_trivial_component(rng):
    for _ in range(20):
        chain = random_chain(rng, int(rng.integers(2, 6)))
        pcomp = decompose_chain(chain)
        rotated = rotate_chain(chain, pcomp.pchain)
        for k in range(len(rotated.prefix) + len(rotated.cycle)):
            assert np.diag(rotated.at(k)).min() >= pcomp.gamma - 1e-15


@given(st.integers(0, 2**32 - 1))
def test_rotated_product_identity(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    chain = random_chain(rng, m, doubly=bool(rng.integers(2)))
    pchain = random_perm_chain(rng, m)
    assert rotated_product_identity_check(chain, pchain, 7, 2)
    s = int(rng.integers(0, 5))
    assert rotated_product_identity_check(chain, pchain, s + 1, s)
    assert rotated_product_identity_check(chain, PermChain.trivial(m), 5, 1)


@given(st.integers(0, 2**32 - 1))
def test_rotation_preserves_flavor_and_flows(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    chain = random_chain(rng, m, terms=int(rng.integers(1, 4)))
    pchain = random_perm_chain(rng, m)
    rotated = rotate_chain(chain, pchain)
    for b in rotated.matrices():
        assert np.allclose(b.sum(axis=0), 1, atol=1e-9)
    s0 = IndexSet(m, int(rng.integers(1, 2**m - 1)))
    seq = trajectory(pchain, s0)
    start, length = perm_period(chain, pchain)
    for k in range(start + length):
        assert abs(step_flow(chain.at(k), seq.at(k + 1), seq.at(k))
                   - set_flow(rotated.at(k), s0)) <= 1e-12
    assert has_absolute_infinite_flow(chain).holds == has_absolute_infinite_flow(rotated).holds
