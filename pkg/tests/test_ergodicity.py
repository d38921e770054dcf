import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochflow.birkhoff import PermComponent, component_for, decompose_chain, rotate_chain
from stochflow.chain import (
    DOUBLY_STOCHASTIC,
    Chain,
    PermChain,
    backward_product,
    perm_products,
    uniform,
)
from stochflow.errors import ContractError, FlowStarvation
from stochflow.ergodicity import (
    ERGODIC,
    NOT_ERGODIC,
    UNDECIDED,
    accumulation_times,
    contraction_factor,
    ergodicity_verdict,
    fixed_point,
    infinite_flow_graph,
    limit_up_to_permutation,
    lyapunov,
    lyapunov_decrease_identity_check,
    product_from_zero,
    rate_certificate,
    row_spread,
    simulate,
)
from stochflow.flow import has_absolute_infinite_flow, step_flow, total_flow, trajectory
from stochflow.generate import (
    block_diagonal,
    random_chain,
    random_doubly_stochastic,
    random_perm_chain,
    unrotate,
)
from stochflow.indexset import IndexSet

from conftest import PINNED, QUARTER, SWAP


def brute_accumulation_times(chain, pchain, delta, count):
    m = chain.dim
    seqs = [trajectory(pchain, IndexSet(m, mask)) for mask in range(1, 2**m - 1)]
    acc = [0.0] * len(seqs)
    times, k = [], 0
    while len(times) < count:
        for n, seq in enumerate(seqs):
            acc[n] += step_flow(chain.at(k), seq.at(k + 1), seq.at(k))
        k += 1
        if min(acc) >= delta:
            times.append(k)
            acc = [0.0] * len(seqs)
    return times


def trivial_component(chain):
    return component_for(chain, PermChain.trivial(chain.dim))


def test_simulate_examples():
    xs = simulate(Chain.static(PINNED), [1.0, 0.5, 0.0], 50)
    assert np.array_equal(xs, np.tile([1.0, 0.5, 0.0], (51, 1)))
    xs = simulate(Chain.static(QUARTER), [1.0, 0.0], 1)
    assert np.allclose(xs[1], [0.25, 0.75], atol=1e-16)
    chain = random_chain(np.random.default_rng(3), 4, doubly=False)
    assert np.allclose(simulate(chain, np.ones(4), 20), 1.0, atol=1e-14)
    with pytest.raises(ContractError):
        simulate(chain, np.ones(3), 5)


def test_lyapunov_examples():
    assert lyapunov(np.ones(4)) == 0.0
    assert lyapunov([1.0, 0.0]) == 0.5
    x = np.array([0.3, -1.2, 4.0, 2.5])
    assert lyapunov(x[[2, 0, 3, 1]]) == pytest.approx(lyapunov(x), abs=1e-14)


def test_decrease_identity_examples(rng):
    x = rng.normal(size=4)
    assert lyapunov_decrease_identity_check(np.eye(4), x)
    a = uniform(4)
    assert lyapunov(a @ x) == pytest.approx(0.0, abs=1e-14)
    h = a.T @ a
    assert np.allclose(h, a, atol=1e-15)
    assert lyapunov_decrease_identity_check(a, x)
    with pytest.raises(ContractError):
        lyapunov_decrease_identity_check(PINNED, x)


@given(st.integers(0, 2**32 - 1))
def test_decrease_identity_random(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    assert lyapunov_decrease_identity_check(random_doubly_stochastic(rng, m), rng.normal(size=m))


def test_accumulation_times_uniform():
    chain = Chain.static(uniform(3), DOUBLY_STOCHASTIC)
    times = accumulation_times(chain, trivial_component(chain), 0.5, 5)
    assert times == [1, 2, 3, 4, 5]


def test_accumulation_times_identity_starves():
    chain = Chain.static(np.eye(3), DOUBLY_STOCHASTIC)
    with pytest.raises(FlowStarvation) as info:
        accumulation_times(chain, None, 0.5, 3)
    assert info.value.subset == IndexSet.of(3, [0])


def test_accumulation_times_swap_with_trivial_component():
    # A_S(swap) = 2 for both singletons, so each step suffices.
    chain = Chain.static(SWAP, DOUBLY_STOCHASTIC)
    pcomp = PermComponent(1.0, PermChain.trivial(2), Chain.static(np.eye(2)), True)
    assert accumulation_times(chain, pcomp, 0.5, 3) == [1, 2, 3]
    with pytest.raises(FlowStarvation):
        accumulation_times(chain, None, 0.5, 3)


def test_accumulation_times_pinned_chain():
    chain = Chain.static(PINNED)
    min_flow = min(np.sum([PINNED[i, j] + PINNED[j, i] for i in s for j in range(3) if j not in s])
                   for c in (1, 2) for s in itertools.combinations(range(3), c))
    assert min_flow == pytest.approx(1 / 3)
    pcomp = trivial_component(chain)
    times = accumulation_times(chain, pcomp, 0.5, 3)
    assert times == [2, 4, 6]
    assert times == brute_accumulation_times(chain, pcomp.pchain, 0.5, 3)


@given(st.integers(0, 2**32 - 1))
def test_accumulation_times_match_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    chain = random_chain(rng, m, terms=int(rng.integers(2, 5)))
    pcomp = decompose_chain(chain)
    delta = float(rng.choice([1 / 3, 0.5, 0.9]))
    try:
        times = accumulation_times(chain, pcomp, delta, 4)
    except FlowStarvation:
        assert not has_absolute_infinite_flow(chain).holds
        return
    assert times == brute_accumulation_times(chain, pcomp.pchain, delta, 4)


def test_contraction_factor_example():
    assert contraction_factor(0.75, 0.5, 2) == pytest.approx(0.953125, abs=1e-15)


def test_rate_certificate_examples():
    chain = Chain.static(QUARTER, DOUBLY_STOCHASTIC)
    cert = rate_certificate(chain, [1.0, 0.0], delta=0.5, count=6)
    assert cert.gamma == 0.75
    assert cert.contraction_factor == pytest.approx(0.953125)
    assert all(r <= 0.953125 for r in cert.ratios())
    assert not cert.violations()
    flat = rate_certificate(chain, np.ones(2), delta=0.5, count=4)
    assert all(v == 0.0 for _, v in flat.trace)
    with pytest.raises(ContractError):
        rate_certificate(Chain.static(PINNED), [1.0, 0.5, 0.0])


@given(st.integers(0, 2**32 - 1))
def test_rate_certificate_random(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    chain = random_chain(rng, m)
    if ergodicity_verdict(chain).status != ERGODIC:
        return
    for delta in (1 / 3, 0.5):
        cert = rate_certificate(chain, rng.normal(size=m), delta, 6)
        assert not cert.violations()


def test_infinite_flow_graph_examples():
    graph = infinite_flow_graph(Chain.static(PINNED), trivial_component(Chain.static(PINNED)))
    assert set(graph.edges) == {(0, 1), (1, 2)}
    graph = infinite_flow_graph(Chain.static(uniform(4)))
    assert len(graph.edges) == 6 and graph.is_connected()
    graph = infinite_flow_graph(Chain.static(np.eye(3)))
    assert graph.edges == () and graph.components() == [(0,), (1,), (2,)]


def test_verdict_examples():
    assert ergodicity_verdict(Chain.static(QUARTER, DOUBLY_STOCHASTIC)).status == ERGODIC
    verdict = ergodicity_verdict(Chain.static(SWAP, DOUBLY_STOCHASTIC))
    assert verdict.status == NOT_ERGODIC
    assert set(verdict.witness.cycle) == {IndexSet.of(2, [0]), IndexSet.of(2, [1])}
    assert not total_flow(Chain.static(SWAP), verdict.witness).infinite
    verdict = ergodicity_verdict(Chain.static(PINNED))
    assert verdict.status == UNDECIDED
    assert verdict.details["fixed_point"] == pytest.approx([0.0, 0.5, 1.0]) or \
        verdict.details["fixed_point"] == pytest.approx([1.0, 0.5, 0.0])
    assert verdict.details["spread"][-1][1] > 1.0


def test_verdict_general_stochastic_violation():
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    verdict = ergodicity_verdict(Chain.static(a))
    assert verdict.status == NOT_ERGODIC and verdict.reason == "absolute-flow-violation"


def test_fixed_point_absent_for_mixing_chain():
    assert fixed_point(Chain.static(QUARTER)) is None


def test_product_from_zero_matches_reference(rng):
    chain = random_chain(rng, 4, max_prefix=2, max_cycle=3)
    for k in (1, 3, 7, 20):
        assert np.allclose(product_from_zero(chain, k), backward_product(chain, k, 0), atol=1e-12)


def test_limit_ergodic_chain():
    chain = Chain.static(QUARTER, DOUBLY_STOCHASTIC)
    est = limit_up_to_permutation(chain, 0, 40)
    assert est.clusters == [(0, 1)]
    assert np.max(np.abs(est.limit - 0.5)) <= 1e-10
    assert row_spread(backward_product(chain, 40, 0)) < 1e-10


def test_limit_block_chain():
    a = block_diagonal(QUARTER, [[1.0]])
    est = limit_up_to_permutation(Chain.static(a, DOUBLY_STOCHASTIC), 0, 60)
    assert est.clusters == [(0, 1), (2,)]
    assert np.linalg.norm(est.limit[0] - est.limit[1]) < 1e-8
    assert np.linalg.norm(est.limit[0] - est.limit[2]) > 0.1


def test_limit_rejects_general_stochastic():
    a0 = np.array([[1.0, 0, 0], [1, 0, 0], [0, 0, 1]])
    a1 = np.array([[1.0, 0, 0], [0, 0, 1], [0, 0, 1]])
    chain = Chain.periodic([a0, a1])
    assert np.array_equal(backward_product(chain, 4, 0), a1)
    with pytest.raises(ContractError):
        limit_up_to_permutation(chain, 0, 40)


@given(st.integers(0, 2**32 - 1))
def test_lyapunov_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    chain = random_chain(rng, m)
    pchain = random_perm_chain(rng, m)
    x0 = rng.normal(size=m)
    xs = simulate(chain, x0, 15)
    ys = simulate(rotate_chain(chain, pchain), x0, 15)
    prods = perm_products(pchain, 15)
    for k in range(16):
        assert abs(lyapunov(xs[k]) - lyapunov(ys[k])) <= 1e-10
        assert np.allclose(prods[k].matrix().T @ xs[k], ys[k], atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_verdict_invariant_under_rotation(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    chain = random_chain(rng, m, terms=int(rng.integers(1, 4)))
    rotated = rotate_chain(chain, random_perm_chain(rng, m))
    assert ergodicity_verdict(chain).status == ergodicity_verdict(rotated).status


@given(st.integers(0, 2**32 - 1))
def test_doubly_verdict_matches_absolute_flow(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    chain = random_chain(rng, m, terms=int(rng.integers(1, 4)))
    verdict = ergodicity_verdict(chain)
    assert (verdict.status == ERGODIC) == has_absolute_infinite_flow(chain).holds
    if verdict.status == NOT_ERGODIC:
        assert not total_flow(chain, verdict.witness).infinite


def test_clusters_survive_unrotation(rng):
    blocks = block_diagonal(QUARTER, uniform(3))
    base = Chain.static(0.6 * np.eye(5) + 0.4 * blocks, DOUBLY_STOCHASTIC)
    pchain = PermChain.static((2, 4, 0, 1, 3))
    chain = unrotate(base, pchain)
    pcomp = decompose_chain(chain)
    assert pcomp.pchain.at(0) == pchain.at(0)
    est = limit_up_to_permutation(chain, 0, 200, pcomp)
    assert est.clusters == [(0, 1), (2, 3, 4)]
