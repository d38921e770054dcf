"""Ergodicity verdicts, convergence-rate certificates and limiting clusters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .birkhoff import PermComponent, decompose_chain, rotate_chain, rotate_matrix
from .chain import (
    MAX_DIM,
    TOL_ZERO,
    Chain,
    Permutation,
    backward_product,
    check_dim,
    perm_period,
    perm_products,
)
from .errors import ContractError, FlowStarvation, InvariantViolation
from .flow import (
    has_absolute_infinite_flow,
    set_flows,
    total_flow,
    trajectory,
)
from .graphs import connected_components
from .indexset import IndexSet, indicator_rows, nontrivial_masks

ERGODIC = "ergodic"
NOT_ERGODIC = "not-ergodic"
UNDECIDED = "undecided"

ABSOLUTE_FLOW_EQUIVALENCE = "absolute-flow-equivalence"
ABSOLUTE_FLOW_VIOLATION = "absolute-flow-violation"
NUMERICAL_ONLY = "numerical-only"

DEFAULT_DELTA = 1.0 / 3.0
SPREAD_LEVELS = 20


# -- dynamics -------------------------------------------------------------------

def simulate(chain: Chain, x0, horizon: int) -> np.ndarray:
    """States ``x(0), ..., x(horizon)`` of ``x(k+1) = A(k) x(k)``, one per row."""
    x = np.asarray(x0, dtype=float)
    if x.shape != (chain.dim,):
        raise ContractError(f"x0 has length {x.size}, chain has dim {chain.dim}")
    if horizon < 0:
        raise ContractError("horizon must be nonnegative")
    out = np.empty((horizon + 1, chain.dim))
    out[0] = x
    for k in range(horizon):
        out[k + 1] = chain.at(k) @ out[k]
    return out


def lyapunov(x) -> float:
    """Sum of squared deviations from the mean."""
    x = np.asarray(x, dtype=float)
    return float(np.sum((x - x.mean()) ** 2))


def lyapunov_decrease_identity_check(a, x, tol: float = 1e-10) -> bool:
    """Check ``V(Ax) = V(x) - sum_{i<j} H_ij (x_i - x_j)^2`` with ``H = A^T A``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if not np.allclose(a.sum(axis=0), 1, atol=1e-9) or not np.allclose(a.sum(axis=1), 1, atol=1e-9):
        raise ContractError("decrease identity needs a doubly stochastic matrix")
    h = a.T @ a
    diff = x[:, None] - x[None, :]
    iu = np.triu_indices(x.size, k=1)
    drop = float(np.sum(h[iu] * diff[iu] ** 2))
    return abs(lyapunov(a @ x) - (lyapunov(x) - drop)) <= tol


# -- accumulation times and the rate certificate --------------------------------

def _component(chain: Chain, pcomp: PermComponent | None, tol_zero: float) -> PermComponent:
    if pcomp is None:
        pcomp = decompose_chain(chain, tol_zero)
        if pcomp is None:
            raise ContractError("chain is not decomposable")
    if pcomp.pchain.dim != chain.dim:
        raise ContractError("permutation component and chain dimensions differ")
    return pcomp


def accumulation_times(chain: Chain, pcomp: PermComponent | None, delta: float, count: int,
                       tol_zero: float = TOL_ZERO, cap: int = MAX_DIM) -> list[int]:
    """Times ``t_1 < ... < t_count`` at which every trajectory has gathered ``delta``.

    ``t_q`` is the first ``t > t_{q-1}`` such that, for every nontrivial
    ``S(0)``, the flow along the trajectory of ``S(0)`` under the permutation
    component summed over ``[t_{q-1}, t)`` is at least ``delta``.

    Raises :class:`FlowStarvation` when some trajectory gathers no flow over
    a full period, since then the times do not exist.
    """
    if not 0 < delta < 1:
        raise ContractError(f"delta must lie in (0, 1), got {delta}")
    if count < 0:
        raise ContractError("count must be nonnegative")
    if chain.dim < 2:
        raise ContractError("accumulation times need dimension at least 2")
    check_dim(chain.dim, cap)
    pcomp = _component(chain, pcomp, tol_zero)
    masks = nontrivial_masks(chain.dim)

    rotated = rotate_chain(chain, pcomp.pchain)
    per_period = sum(set_flows(b, masks, chain.dim) for b in rotated.cycle)
    starving = np.flatnonzero(per_period <= tol_zero)
    if starving.size:
        s0 = IndexSet(chain.dim, int(masks[starving[0]]))
        raise FlowStarvation(f"trajectory of {s0!r} carries no flow; accumulation times do not exist",
                             subset=s0)

    x0 = indicator_rows(masks, chain.dim)
    acc = np.zeros(len(masks))
    times: list[int] = []
    perm = Permutation.identity(chain.dim)
    cur = x0
    k = 0
    while len(times) < count:
        a = chain.at(k)
        nxt_perm = pcomp.pchain.at(k) @ perm
        nxt = x0[:, nxt_perm.map]
        acc += np.einsum("si,si->s", nxt, (1 - cur) @ a.T)
        acc += np.einsum("si,si->s", 1 - nxt, cur @ a.T)
        perm, cur, k = nxt_perm, nxt, k + 1
        if acc.min() >= delta:
            times.append(k)
            acc[:] = 0.0
    return times


def contraction_factor(gamma: float, delta: float, m: int) -> float:
    return 1.0 - gamma * delta * (1.0 - delta) ** 2 / (m * (m - 1) ** 2)


@dataclass(frozen=True)
class RateCertificate:
    gamma: float
    delta: float
    accumulation_times: tuple[int, ...]
    contraction_factor: float
    trace: tuple[tuple[int, float], ...]
    slack: float = 0.0

    def ratios(self) -> list[float]:
        return [v1 / v0 if v0 > 0 else 0.0 for (_, v0), (_, v1) in zip(self.trace, self.trace[1:])]

    def violations(self) -> list[int]:
        """Indices ``q`` where ``V(x(t_q)) > factor * V(x(t_{q-1}))`` beyond the slack."""
        return [q for q in range(1, len(self.trace))
                if self.trace[q][1] > self.contraction_factor * self.trace[q - 1][1] + self.slack]


def rate_certificate(chain: Chain, x0, delta: float = DEFAULT_DELTA, count: int = 10,
                     tol_zero: float = TOL_ZERO, pcomp: PermComponent | None = None) -> RateCertificate:
    """Lyapunov contraction between consecutive accumulation times.

    The guarantee is ``V(x(t_q)) <= (1 - gamma delta (1-delta)^2 / (m (m-1)^2)) V(x(t_{q-1}))``.
    Comparisons carry an absolute slack at the level of rounding noise in
    ``V``; a violation beyond it raises :class:`InvariantViolation`.
    """
    if not chain.is_doubly:
        raise ContractError("rate certificate needs a doubly stochastic chain")
    pcomp = _component(chain, pcomp, tol_zero)
    times = accumulation_times(chain, pcomp, delta, count, tol_zero)
    horizon = times[-1] if times else 0
    xs = simulate(chain, x0, horizon)
    points = [0] + times
    trace = tuple((t, lyapunov(xs[t])) for t in points)
    scale = max(1.0, float(np.max(np.abs(xs[0])))) if xs.size else 1.0
    slack = chain.dim * (64 * np.finfo(float).eps * scale) ** 2
    cert = RateCertificate(pcomp.gamma, delta, tuple(times),
                           contraction_factor(pcomp.gamma, delta, chain.dim), trace, slack)
    bad = cert.violations()
    if bad:
        q = bad[0]
        raise InvariantViolation(
            f"contraction fails at q={q}: V={trace[q][1]:.17g} > "
            f"{cert.contraction_factor:.17g} * {trace[q - 1][1]:.17g}")
    return cert


# -- infinite flow graph and limits -------------------------------------------

@dataclass(frozen=True)
class InfiniteFlowGraph:
    dim: int
    edges: tuple[tuple[int, int], ...]
    pchain: Any = field(repr=False, default=None)

    def components(self) -> list[tuple[int, ...]]:
        return connected_components(self.dim, self.edges)

    def is_connected(self) -> bool:
        return len(self.components()) == 1


def pairwise_period_flow(chain: Chain, pchain) -> np.ndarray:
    """``W[i, j]``: one period of ``A_{i(k+1), j(k)}(k) + A_{j(k+1), i(k)}(k)``.

    ``i(k)`` is the position of index ``i`` after ``P(k:0)``.
    """
    start, length = perm_period(chain, pchain)
    prods = perm_products(pchain, start + length)
    w = np.zeros((chain.dim, chain.dim))
    for k in range(start, start + length):
        # entry [i, j] is A[i(k+1), j(k)]
        moved = rotate_matrix(chain.at(k), prods[k + 1], prods[k])
        w += moved + moved.T
    return w


def infinite_flow_graph(chain: Chain, pcomp: PermComponent | None = None,
                        tol_zero: float = TOL_ZERO) -> InfiniteFlowGraph:
    """Pairs whose trajectory flow diverges under the permutation component."""
    pcomp = _component(chain, pcomp, tol_zero)
    w = pairwise_period_flow(chain, pcomp.pchain)
    edges = tuple((i, j) for i in range(chain.dim) for j in range(i + 1, chain.dim)
                  if w[i, j] > tol_zero)
    return InfiniteFlowGraph(chain.dim, edges, pcomp.pchain)


@dataclass(frozen=True)
class ErgodicityVerdict:
    status: str
    reason: str
    witness: Any = None
    details: dict = field(default_factory=dict)


def product_from_zero(chain: Chain, k: int) -> np.ndarray:
    """``A(k:0)`` using powers of the one-period product past the prefix.

    Used for long-horizon diagnostics only; the plain
    :func:`~stochflow.chain.backward_product` stays the reference.
    """
    if k == 0:
        return np.eye(chain.dim)
    start, length = len(chain.prefix), len(chain.cycle)
    if k <= start + length:
        return backward_product(chain, k, 0)
    head = backward_product(chain, start, 0) if start else np.eye(chain.dim)
    period = backward_product(chain, start + length, start)
    n, r = divmod(k - start, length)
    tail = backward_product(chain, start + r, start) if r else np.eye(chain.dim)
    return tail @ np.linalg.matrix_power(period, n) @ head


def row_spread(p: np.ndarray) -> float:
    """Largest Euclidean distance between two rows."""
    diff = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


def spread_trace(chain: Chain, levels: int = SPREAD_LEVELS) -> list[tuple[int, float]]:
    """Row spread of ``A(k:0)`` at ``k = 1, 2, 4, ..., 2**levels``."""
    return [(2 ** h, row_spread(product_from_zero(chain, 2 ** h))) for h in range(levels + 1)]


def fixed_point(chain: Chain, tol: float = 1e-9) -> np.ndarray | None:
    """A non-constant vector fixed by every cycle matrix, scaled to ``[0, 1]``.

    Such a vector is invariant under the tail dynamics and rules out
    consensus, so it serves as a numerical non-ergodicity witness.
    """
    m = chain.dim
    stack = np.vstack([a - np.eye(m) for a in chain.cycle])
    _, sv, vt = np.linalg.svd(stack)
    null = vt[sv <= tol]
    if len(null) < 2:
        return None
    centered = null - null.mean(axis=1, keepdims=True)
    v = centered[np.argmax(np.ptp(centered, axis=1))]
    v = v - v.min()
    return v / v.max()


def ergodicity_verdict(chain: Chain, tol_zero: float = TOL_ZERO,
                       levels: int = SPREAD_LEVELS) -> ErgodicityVerdict:
    """Decide ergodicity where the flow theory allows it.

    Doubly stochastic chains are decided exactly: ergodic iff the infinite
    flow graph under the permutation component is connected.  The witness of
    non-ergodicity is the trajectory of one connected component, whose flow
    is finite.  For merely stochastic chains a failure of absolute infinite
    flow proves non-ergodicity; otherwise the verdict is undecided and a row
    spread trace is attached.
    """
    if chain.dim == 1:
        return ErgodicityVerdict(ERGODIC, ABSOLUTE_FLOW_EQUIVALENCE)
    if chain.is_doubly:
        pcomp = _component(chain, None, tol_zero)
        graph = infinite_flow_graph(chain, pcomp, tol_zero)
        comps = graph.components()
        details = {"gamma": pcomp.gamma, "components": comps}
        if len(comps) == 1:
            return ErgodicityVerdict(ERGODIC, ABSOLUTE_FLOW_EQUIVALENCE, None, details)
        seq = trajectory(pcomp.pchain, IndexSet.of(chain.dim, comps[0]))
        report = total_flow(chain, seq, tol_zero)
        if report.infinite:
            raise InvariantViolation("component trajectory carries infinite flow")
        details["witness_flow"] = report.value
        return ErgodicityVerdict(NOT_ERGODIC, ABSOLUTE_FLOW_EQUIVALENCE, seq, details)
    decision = has_absolute_infinite_flow(chain, tol_zero)
    if not decision.holds:
        report = total_flow(chain, decision.witness, tol_zero)
        return ErgodicityVerdict(NOT_ERGODIC, ABSOLUTE_FLOW_VIOLATION, decision.witness,
                                 {"witness_flow": report.value})
    details: dict[str, Any] = {"spread": spread_trace(chain, levels)}
    fp = fixed_point(chain)
    if fp is not None:
        details["fixed_point"] = fp.tolist()
    return ErgodicityVerdict(UNDECIDED, NUMERICAL_ONLY, None, details)


@dataclass(frozen=True)
class LimitEstimate:
    q: Permutation
    limit: np.ndarray
    clusters: list[tuple[int, ...]]
    cauchy_residual: float


def limit_up_to_permutation(chain: Chain, t0: int, horizon: int,
                            pcomp: PermComponent | None = None,
                            tol_zero: float = TOL_ZERO) -> LimitEstimate:
    """``Q(horizon) A(horizon:t0)`` with ``Q(k) = P(k:0)^T``, plus predicted clusters.

    Rows ``i`` and ``j`` of ``Q(k) A(k:t0)`` converge to each other exactly
    when ``i`` and ``j`` share a component of the infinite flow graph.  The
    Cauchy residual compares against the estimate at the midpoint horizon.
    """
    if not chain.is_doubly:
        raise ContractError("limit up to permutation needs a doubly stochastic chain")
    if not horizon > t0 >= 0:
        raise ContractError(f"need horizon > t0 >= 0, got horizon={horizon}, t0={t0}")
    pcomp = _component(chain, pcomp, tol_zero)
    prods = perm_products(pcomp.pchain, horizon)

    def estimate(k):
        q = prods[k].inverse()
        return q, backward_product(chain, k, t0)[list(q.map), :]

    q, limit = estimate(horizon)
    mid = t0 + (horizon - t0) // 2
    residual = float(np.max(np.abs(limit - estimate(mid)[1]))) if mid > t0 else float("nan")
    clusters = infinite_flow_graph(chain, pcomp, tol_zero).components()
    return LimitEstimate(q, limit, clusters, residual)
