"""Flows across index sets and exact deciders for (absolute) infinite flow.

For an eventually periodic chain every flow term in the periodic part is
either at most ``tol_zero`` or bounded below by a fixed positive constant, so
an infinite sum diverges exactly when one period contributes positive flow.
Absolute infinite flow fails exactly when some regular sequence can take
zero-flow steps forever, which is a cycle in a finite "zero-step" graph on
``(set, phase)`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .chain import (
    MAX_DIM,
    TOL_ZERO,
    Chain,
    PermChain,
    _Periodic,
    apply_perm_to_set,
    check_dim,
    joint_period,
)
from .errors import ContractError
from .graphs import find_cycle
from .indexset import (
    IndexSet,
    indicator_rows,
    masks_of_size,
    nontrivial_masks,
    require_nontrivial,
)

__all__ = [
    "IndexSet",
    "RegularSeq",
    "FlowReport",
    "Decision",
    "set_flow",
    "step_flow",
    "total_flow",
    "has_infinite_flow",
    "has_absolute_infinite_flow",
    "trajectory",
]


@dataclass(frozen=True)
class RegularSeq(_Periodic):
    """Eventually periodic sequence of index sets of one common cardinality."""

    dim: int
    prefix: tuple[IndexSet, ...]
    cycle: tuple[IndexSet, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ContractError("regular sequence cycle must be nonempty")
        sets = self.prefix + self.cycle
        for s in sets:
            if s.dim != self.dim:
                raise ContractError(f"set of dim {s.dim} in a sequence of dim {self.dim}")
            require_nontrivial(s)
        if len({len(s) for s in sets}) != 1:
            raise ContractError("sets of a regular sequence must share one cardinality")

    @classmethod
    def static(cls, s: IndexSet) -> RegularSeq:
        return cls(s.dim, (), (s,))

    @property
    def cardinality(self) -> int:
        return len(self.cycle[0])


class FlowReport(NamedTuple):
    infinite: bool
    value: float | None
    witness: dict[str, Any]


class Decision(NamedTuple):
    holds: bool
    witness: Any = None


def set_flow(a, s: IndexSet) -> float:
    """``A_S``: total weight between ``S`` and its complement, both directions."""
    require_nontrivial(s)
    a = np.asarray(a)
    x = s.indicator()
    return float(x @ a @ (1 - x) + (1 - x) @ a @ x)


def step_flow(a, s_next: IndexSet, s_cur: IndexSet) -> float:
    """Flow of one step when the set moves from ``s_cur`` to ``s_next``.

    Sums ``A[i, j]`` over ``i in s_next, j not in s_cur`` and over
    ``i not in s_next, j in s_cur``.
    """
    require_nontrivial(s_cur)
    require_nontrivial(s_next)
    if len(s_next) != len(s_cur):
        raise ContractError("step flow needs sets of equal cardinality")
    a = np.asarray(a)
    y, x = s_next.indicator(), s_cur.indicator()
    return float(y @ a @ (1 - x) + (1 - y) @ a @ x)


def set_flows(a, masks: np.ndarray, dim: int) -> np.ndarray:
    """``A_S`` for every mask at once."""
    x = indicator_rows(masks, dim)
    return np.einsum("si,si->s", x @ a, 1 - x) + np.einsum("si,si->s", (1 - x) @ a, x)


def total_flow(chain: Chain, seq: RegularSeq, tol_zero: float = TOL_ZERO) -> FlowReport:
    """Decide ``F({A(k)}; {S(k)})`` exactly.

    Past the joint prefix both presentations repeat with the joint period,
    so the sum is infinite iff one period carries more than ``tol_zero``.
    The finite value is the sum of the prefix terms.
    """
    if chain.dim != seq.dim:
        raise ContractError("chain and sequence dimensions differ")
    start, length = joint_period(chain, seq)
    head = sum(step_flow(chain.at(k), seq.at(k + 1), seq.at(k)) for k in range(start))
    period = sum(step_flow(chain.at(k), seq.at(k + 1), seq.at(k))
                 for k in range(start, start + length))
    witness = {"period_start": start, "period_length": length, "period_flow": period}
    if period > tol_zero:
        return FlowReport(True, None, witness)
    return FlowReport(False, float(head), witness)


def has_infinite_flow(chain: Chain, tol_zero: float = TOL_ZERO,
                      cap: int = MAX_DIM) -> Decision:
    """Infinite flow over every static nontrivial set.

    The witness on failure is the smallest violating set.
    """
    if chain.dim < 2:
        raise ContractError("infinite flow needs dimension at least 2")
    check_dim(chain.dim, cap)
    masks = nontrivial_masks(chain.dim)
    per_period = sum(set_flows(a, masks, chain.dim) for a in chain.cycle)
    bad = np.flatnonzero(per_period <= tol_zero)
    if bad.size:
        return Decision(False, IndexSet(chain.dim, int(masks[bad[0]])))
    return Decision(True)


def _zero_step_cycle(chain: Chain, size: int, tol_zero: float):
    masks = masks_of_size(chain.dim, size)
    x = indicator_rows(masks, chain.dim)
    cycle_len = len(chain.cycle)

    def successors(node):
        r, phase = node
        a = chain.cycle[phase]
        inside = a @ x[r]
        flows = x @ (a.sum(axis=1) - inside) + (1 - x) @ inside
        nxt = (phase + 1) % cycle_len
        return [(int(t), nxt) for t in np.flatnonzero(flows <= tol_zero)]

    nodes = ((r, 0) for r in range(len(masks)))
    found = find_cycle(nodes, successors)
    if found is None:
        return None
    k0 = next(i for i, (_, phase) in enumerate(found) if phase == 0)
    found = found[k0:] + found[:k0]
    return [IndexSet(chain.dim, int(masks[r])) for r, _ in found]


def _minimal_cycle(sets: list) -> list:
    n = len(sets)
    for d in range(1, n + 1):
        if n % d == 0 and all(sets[i] == sets[i % d] for i in range(n)):
            return sets[:d]
    return sets


def has_absolute_infinite_flow(chain: Chain, tol_zero: float = TOL_ZERO,
                               cap: int = MAX_DIM) -> Decision:
    """Infinite flow along every regular sequence.

    On failure the witness is a :class:`RegularSeq` with finite flow.  Only
    cardinalities up to ``m // 2`` are searched: replacing both sets by their
    complements leaves the step flow unchanged.
    """
    if chain.dim < 2:
        raise ContractError("absolute infinite flow needs dimension at least 2")
    check_dim(chain.dim, cap)
    for size in range(1, chain.dim // 2 + 1):
        cyc = _zero_step_cycle(chain, size, tol_zero)
        if cyc is not None:
            # every cycle of the phased graph has length divisible by the chain
            # period and starts at phase 0, i.e. at time len(prefix)
            prefix = (cyc[0],) * len(chain.prefix)
            return Decision(False, RegularSeq(chain.dim, prefix, tuple(_minimal_cycle(cyc))))
    return Decision(True)


def trajectory(pchain: PermChain, s0: IndexSet) -> RegularSeq:
    """The trajectory ``S(k) = P(k:0)(S(0))`` as an eventually periodic sequence."""
    require_nontrivial(s0)
    if pchain.dim != s0.dim:
        raise ContractError("permutation chain and set dimensions differ")
    p, c = len(pchain.prefix), len(pchain.cycle)
    sets = [s0]
    seen: dict[tuple[IndexSet, int], int] = {}
    k = 0
    while True:
        if k >= p:
            state = (sets[k], (k - p) % c)
            if state in seen:
                j = seen[state]
                return RegularSeq(pchain.dim, tuple(sets[:j]), tuple(sets[j:k]))
            seen[state] = k
        sets.append(apply_perm_to_set(pchain.at(k), sets[k]))
        k += 1
