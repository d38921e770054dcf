"""Absolute asymptotic stability of finite matrix collections.

A collection is stable when every chain drawn from it is ergodic.  The test
runs on the zero-flow graph: nodes are nontrivial subsets, and ``S -> T``
(same size) is an edge when some matrix in the collection moves no flow
across ``S -> T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .chain import (
    DOUBLY_STOCHASTIC,
    STOCHASTIC,
    TOL_STOCH,
    TOL_ZERO,
    Chain,
    as_stochastic,
    check_dim,
)
from .errors import ContractError, InputError, InvariantViolation
from .flow import Decision, RegularSeq, set_flows, step_flow
from .graphs import find_cycle
from .indexset import IndexSet, indicator_rows, masks_of_size, nontrivial_masks

MAX_DIM = 12

TRIVIAL_COMPONENT = "doubly_stochastic_trivial_component"
COLLECTION_FLAVORS = (STOCHASTIC, DOUBLY_STOCHASTIC, TRIVIAL_COMPONENT)

YES, NO, UNDECIDED = "yes", "no", "undecided"


@dataclass(frozen=True, eq=False)
class Collection:
    dim: int
    matrices: tuple[np.ndarray, ...]
    flavor: str = STOCHASTIC
    tol: float = field(default=TOL_STOCH, repr=False)

    def __post_init__(self):
        if self.flavor not in COLLECTION_FLAVORS:
            raise InputError(f"unknown flavor {self.flavor!r}; expected one of {COLLECTION_FLAVORS}")
        if not self.matrices:
            raise InputError("collection must contain at least one matrix")
        doubly = self.flavor != STOCHASTIC
        mats = tuple(as_stochastic(a, self.tol, doubly) for a in self.matrices)
        for a in mats:
            if a.shape[0] != self.dim:
                raise InputError(f"matrix of size {a.shape[0]} in a collection of dim {self.dim}")
            if self.flavor == TRIVIAL_COMPONENT and np.diag(a).min() <= TOL_ZERO:
                raise InputError("trivial-component collection needs positive diagonals")
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def of(cls, matrices: Sequence, flavor: str = STOCHASTIC, tol: float = TOL_STOCH) -> Collection:
        mats = [np.asarray(a, dtype=float) for a in matrices]
        if not mats:
            raise InputError("collection must contain at least one matrix")
        return cls(mats[0].shape[0], tuple(mats), flavor, tol)

    @property
    def chain_flavor(self) -> str:
        return STOCHASTIC if self.flavor == STOCHASTIC else DOUBLY_STOCHASTIC


def _class_flows(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``F[s, t]`` = step flow of ``a`` across ``S_s -> T_t`` for one size class."""
    moved = x @ a.T                      # row s is (a @ x_S)
    stay = a.sum(axis=1) - moved         # row s is (a @ (1 - x_S))
    return stay @ x.T + moved @ (1 - x).T


@dataclass(frozen=True)
class ZeroFlowGraph:
    """Zero-flow graph stored as one boolean adjacency per set size.

    ``adjacency[c - 1][s, t]`` is true when ``masks[c - 1][s] -> masks[c - 1][t]``
    is an edge; edges never join sets of different sizes.
    """

    dim: int
    masks: tuple[np.ndarray, ...]
    adjacency: tuple[np.ndarray, ...]

    def _locate(self, s: IndexSet) -> tuple[int, int]:
        c = len(s)
        idx = int(np.searchsorted(self.masks[c - 1], s.mask))
        return c - 1, idx

    def has_edge(self, s: IndexSet, t: IndexSet) -> bool:
        if len(s) != len(t) or not (s.is_nontrivial() and t.is_nontrivial()):
            return False
        c, i = self._locate(s)
        _, j = self._locate(t)
        return bool(self.adjacency[c][i, j])

    def edges(self) -> Iterator[tuple[IndexSet, IndexSet]]:
        for masks, adj in zip(self.masks, self.adjacency):
            for i, j in zip(*np.nonzero(adj)):
                yield IndexSet(self.dim, int(masks[i])), IndexSet(self.dim, int(masks[j]))

    def loops(self) -> list[IndexSet]:
        return [IndexSet(self.dim, int(masks[i]))
                for masks, adj in zip(self.masks, self.adjacency)
                for i in np.flatnonzero(np.diag(adj))]

    @property
    def edge_count(self) -> int:
        return int(sum(adj.sum() for adj in self.adjacency))


def build_zero_flow_graph(coll: Collection, tol_zero: float = TOL_ZERO,
                          cap: int = MAX_DIM) -> ZeroFlowGraph:
    """All same-size pairs ``(S, T)`` with ``min_A A_{TS} <= tol_zero``."""
    check_dim(coll.dim, cap)
    masks, adjacency = [], []
    for c in range(1, coll.dim):
        mk = masks_of_size(coll.dim, c)
        x = indicator_rows(mk, coll.dim)
        low = np.minimum.reduce([_class_flows(a, x) for a in coll.matrices])
        masks.append(mk)
        adjacency.append(low <= tol_zero)
    return ZeroFlowGraph(coll.dim, tuple(masks), tuple(adjacency))


def is_cycle_free(g: ZeroFlowGraph) -> Decision:
    """Directed cycle search per size class; the witness is a list of sets."""
    for masks, adj in zip(g.masks, g.adjacency):
        succ = [np.flatnonzero(row).tolist() for row in adj]
        found = find_cycle(range(len(masks)), succ.__getitem__)
        if found is not None:
            return Decision(False, [IndexSet(g.dim, int(masks[i])) for i in found])
    return Decision(True)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: str
    witness: list | None = None
    details: dict = field(default_factory=dict)


def min_set_flow(coll: Collection) -> tuple[float, IndexSet]:
    """``min_{A, S} A_S`` over the collection and nontrivial ``S``, with a minimiser."""
    masks = nontrivial_masks(coll.dim)
    low = np.minimum.reduce([set_flows(a, masks, coll.dim) for a in coll.matrices])
    r = int(np.argmin(low))
    return float(low[r]), IndexSet(coll.dim, int(masks[r]))


def stability_verdict(coll: Collection, tol_zero: float = TOL_ZERO,
                      cap: int = MAX_DIM) -> StabilityVerdict:
    """Stable / unstable / undecided, depending on what the collection's flavor allows.

    Doubly stochastic: stable iff the zero-flow graph is cycle-free.  Trivial
    component: stable iff loop-less, cross-checked against ``min A_S > 0``.
    Stochastic: a cycle proves instability, otherwise undecided.
    """
    g = build_zero_flow_graph(coll, tol_zero, cap)
    details = {"edges": g.edge_count}
    if coll.flavor == TRIVIAL_COMPONENT:
        loops = g.loops()
        low, argmin = min_set_flow(coll)
        details["min_set_flow"] = low
        if (not loops) != (low > tol_zero):
            raise InvariantViolation(
                f"loop test ({len(loops)} loops) disagrees with min set flow {low:.3g} at {argmin!r}")
        if loops:
            return StabilityVerdict(NO, [loops[0]], details)
        return StabilityVerdict(YES, None, details)
    decision = is_cycle_free(g)
    if not decision.holds:
        return StabilityVerdict(NO, decision.witness, details)
    if coll.flavor == DOUBLY_STOCHASTIC:
        return StabilityVerdict(YES, None, details)
    return StabilityVerdict(UNDECIDED, None, details)


def witness_chain_from_cycle(coll: Collection, cycle: Sequence[IndexSet],
                             tol_zero: float = TOL_ZERO) -> tuple[Chain, RegularSeq]:
    """A periodic chain in the collection and a sequence tracing ``cycle`` with zero flow.

    Step ``tau`` uses the matrix minimising the flow across
    ``cycle[tau] -> cycle[tau + 1]`` (indices mod ``len(cycle)``).
    """
    cycle = list(cycle)
    if not cycle:
        raise ContractError("cycle must be nonempty")
    picks = []
    for tau, s in enumerate(cycle):
        t = cycle[(tau + 1) % len(cycle)]
        if len(s) != len(t):
            raise ContractError(f"{s!r} -> {t!r} joins sets of different sizes")
        flows = [step_flow(a, t, s) for a in coll.matrices]
        best = int(np.argmin(flows))
        if flows[best] > tol_zero:
            raise ContractError(f"{s!r} -> {t!r} is not a zero-flow edge")
        picks.append(best)
    r = len(picks)
    d = next(d for d in range(1, r + 1) if r % d == 0 and all(picks[i] == picks[i % d] for i in range(r)))
    chain = Chain(coll.dim, (), tuple(coll.matrices[i] for i in picks[:d]), coll.chain_flavor, coll.tol)
    return chain, RegularSeq(coll.dim, (), tuple(cycle))
