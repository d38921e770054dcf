"""Command line front end.

Exit codes: 0 analysis completed (whatever the verdict), 2 input error,
3 capacity error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as sio
from .birkhoff import decompose_chain, rotate_chain
from .chain import MAX_DIM, TOL_STOCH, TOL_ZERO, backward_product, check_dim
from .errors import CapacityError, ContractError, InvariantViolation, StochFlowError
from .ergodicity import (
    DEFAULT_DELTA,
    ERGODIC,
    NOT_ERGODIC,
    ergodicity_verdict,
    infinite_flow_graph,
    limit_up_to_permutation,
    lyapunov,
    rate_certificate,
    row_spread,
    simulate,
)
from .flow import has_absolute_infinite_flow, has_infinite_flow, total_flow
from .switching import NO, stability_verdict, witness_chain_from_cycle

EXIT_OK, EXIT_INPUT, EXIT_CAPACITY, EXIT_INTERNAL = 0, 2, 3, 4
COMMANDS = ("analyze", "simulate", "rate", "stability", "check")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Path | None
    output_path: Path | None = None
    trace_path: Path | None = None
    witness_path: Path | None = None
    tol_zero: float = TOL_ZERO
    tol_stoch: float = TOL_STOCH
    delta: float = DEFAULT_DELTA
    horizon: int = 40
    count: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ContractError(f"unknown command {self.command!r}")
        if self.tol_zero <= 0 or self.tol_stoch <= 0:
            raise ContractError("tolerances must be positive")
        if not 0 < self.delta < 1:
            raise ContractError(f"delta must lie in (0, 1), got {self.delta}")
        if self.horizon < 0 or self.count < 0:
            raise ContractError("horizon and count must be nonnegative")


@dataclass
class Outcome:
    """Primary text for ``--output`` plus optional side files."""

    text: str
    trace: str | None = None
    witness: str | None = None


def cmd_analyze(config: RunConfig) -> Outcome:
    doc = sio.read_json(config.input_path)
    chain = sio.load_chain(doc, config.tol_stoch)
    check_dim(chain.dim, MAX_DIM)
    tz = config.tol_zero
    report: dict = {"command": "analyze", "dim": chain.dim, "flavor": chain.flavor,
                    "seed": config.seed, "tol_zero": tz, "tol_stoch": config.tol_stoch}
    pcomp = decompose_chain(chain, tz)
    report["decomposable"] = pcomp is not None
    report["gamma"] = pcomp.gamma if pcomp else None
    report["degenerate"] = pcomp.degenerate if pcomp else None
    report["permutation_component"] = pcomp.pchain if pcomp else None
    trace = None
    if chain.dim >= 2:
        inf = has_infinite_flow(chain, tz)
        report["infinite_flow"] = {"holds": inf.holds, "witness": inf.witness}
        ab = has_absolute_infinite_flow(chain, tz)
        entry = {"holds": ab.holds, "witness": ab.witness}
        if not ab.holds:
            entry["witness_flow"] = total_flow(chain, ab.witness, tz)
        report["absolute_infinite_flow"] = entry
    verdict = ergodicity_verdict(chain, tz)
    report["ergodicity"] = {
        "status": verdict.status,
        "ergodic": {ERGODIC: True, NOT_ERGODIC: False}.get(verdict.status),
        "reason": verdict.reason,
        "witness": verdict.witness,
        "details": verdict.details,
    }
    if pcomp is not None and chain.dim >= 2:
        graph = infinite_flow_graph(chain, pcomp, tz)
        report["infinite_flow_graph"] = {"edges": graph.edges, "components": graph.components()}
    if config.horizon > 0:
        product = backward_product(chain, config.horizon, 0)
        report["product"] = {"horizon": config.horizon, "matrix": product,
                             "row_spread": row_spread(product)}
    if chain.is_doubly and config.horizon > 0:
        est = limit_up_to_permutation(chain, 0, config.horizon, pcomp, tz)
        report["limit"] = {
            "t0": 0,
            "horizon": config.horizon,
            "q": est.q,
            "matrix": est.limit,
            "row_spread": row_spread(est.limit),
            "clusters": est.clusters,
            "cauchy_residual": est.cauchy_residual,
        }
    spread = verdict.details.get("spread")
    if spread:
        trace = sio.csv_text(["k", "value"], spread)
    return Outcome(sio.dumps(report), trace=trace)


def cmd_simulate(config: RunConfig) -> Outcome:
    doc = sio.read_json(config.input_path)
    chain = sio.load_chain(doc, config.tol_stoch)
    x0 = sio.load_x0(doc, chain.dim)
    xs = simulate(chain, x0, config.horizon)
    header = ["k"] + [f"x_{i + 1}" for i in range(chain.dim)] + ["V"]
    rows = ([k, *map(float, x), lyapunov(x)] for k, x in enumerate(xs))
    return Outcome(sio.csv_text(header, rows))


def cmd_rate(config: RunConfig) -> Outcome:
    doc = sio.read_json(config.input_path)
    chain = sio.load_chain(doc, config.tol_stoch)
    x0 = sio.load_x0(doc, chain.dim)
    cert = rate_certificate(chain, x0, config.delta, config.count, config.tol_zero)
    rows = []
    for q, (t, v) in enumerate(cert.trace):
        bound = cert.contraction_factor * cert.trace[q - 1][1] if q else ""
        rows.append([q, t, v, bound])
    report = {
        "command": "rate",
        "gamma": cert.gamma,
        "delta": cert.delta,
        "accumulation_times": cert.accumulation_times,
        "contraction_factor": cert.contraction_factor,
        "trace": cert.trace,
        "ratios": cert.ratios(),
        "violations": cert.violations(),
        "seed": config.seed,
    }
    return Outcome(sio.dumps(report), trace=sio.csv_text(["q", "t_q", "V", "bound"], rows))


def cmd_stability(config: RunConfig) -> Outcome:
    doc = sio.read_json(config.input_path)
    coll = sio.load_collection(doc, config.tol_stoch)
    verdict = stability_verdict(coll, config.tol_zero)
    report = {"command": "stability", "dim": coll.dim, "flavor": coll.flavor,
              "stable": verdict.stable, "witness": verdict.witness,
              "details": verdict.details, "seed": config.seed}
    witness = None
    if verdict.stable == NO:
        chain, seq = witness_chain_from_cycle(coll, verdict.witness, config.tol_zero)
        spec = sio.chain_spec(chain)
        report["witness_chain"] = spec
        report["witness_sequence"] = seq
        report["witness_flow"] = total_flow(chain, seq, config.tol_zero)
        witness = sio.dumps(spec)
    return Outcome(sio.dumps(report), witness=witness)


def cmd_check(config: RunConfig) -> Outcome:
    """Seeded randomized property checks over doubly stochastic chains."""
    from .birkhoff import birkhoff_decompose, rotated_product_identity_check
    from .generate import random_chain, random_doubly_stochastic, random_perm_chain

    rng = np.random.default_rng(config.seed)
    failures: dict[str, int] = {"birkhoff": 0, "rotation_identity": 0,
                                "rotation_verdict": 0, "rate": 0}
    for _ in range(config.count):
        m = int(rng.integers(2, 6))
        a = random_doubly_stochastic(rng, m)
        dec = birkhoff_decompose(a)
        if (np.max(np.abs(dec.reconstruct() - a)) > 1e-10 or abs(dec.weight_sum - 1) > 1e-10
                or len(dec.terms) > (m - 1) ** 2 + 1):
            failures["birkhoff"] += 1
        chain = random_chain(rng, m)
        pchain = random_perm_chain(rng, m)
        if not rotated_product_identity_check(chain, pchain, 7, 2):
            failures["rotation_identity"] += 1
        rotated = rotate_chain(chain, pchain)
        if ergodicity_verdict(chain).status != ergodicity_verdict(rotated).status:
            failures["rotation_verdict"] += 1
        if ergodicity_verdict(chain).status == ERGODIC:
            try:
                rate_certificate(chain, rng.normal(size=m), config.delta, 5)
            except InvariantViolation:
                failures["rate"] += 1
    report = {"command": "check", "seed": config.seed, "trials": config.count,
              "failures": failures, "passed": not any(failures.values())}
    return Outcome(sio.dumps(report))


HANDLERS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "stability": cmd_stability,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochflow",
        description="Flow, ergodicity and stability analysis of stochastic matrix chains.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "full report for a chain spec",
        "simulate": "CSV trajectory of x(k+1) = A(k) x(k)",
        "rate": "convergence-rate certificate for a doubly stochastic chain",
        "stability": "absolute asymptotic stability of a matrix collection",
        "check": "seeded randomized property checks",
    }
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=helps[name])
        cmd.add_argument("--input", type=Path, required=name != "check", help="spec file (JSON)")
        cmd.add_argument("--output", type=Path, help="report path (default: stdout)")
        cmd.add_argument("--trace", type=Path, help="CSV trace path (analyze, rate)")
        cmd.add_argument("--witness", type=Path, help="witness chain spec path (stability)")
        cmd.add_argument("--tol-zero", type=float, default=TOL_ZERO)
        cmd.add_argument("--tol-stoch", type=float, default=TOL_STOCH)
        cmd.add_argument("--delta", type=float, default=DEFAULT_DELTA)
        cmd.add_argument("--horizon", type=int, default=40)
        cmd.add_argument("--count", type=int, default=10)
        cmd.add_argument("--seed", type=int, default=0)
    return parser


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def run(config: RunConfig) -> Outcome:
    outcome = HANDLERS[config.command](config)
    _write(config.output_path, outcome.text)
    if outcome.trace is not None and config.trace_path is not None:
        config.trace_path.write_text(outcome.trace, encoding="utf-8")
    if outcome.witness is not None:
        path = config.witness_path
        if path is None and config.output_path is not None:
            path = config.output_path.with_suffix(".witness.json")
        if path is not None:
            path.write_text(outcome.witness, encoding="utf-8")
    return outcome


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(
            command=args.command,
            input_path=args.input,
            output_path=args.output,
            trace_path=args.trace,
            witness_path=args.witness,
            tol_zero=args.tol_zero,
            tol_stoch=args.tol_stoch,
            delta=args.delta,
            horizon=args.horizon,
            count=args.count,
            seed=args.seed,
        )
        run(config)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ContractError, StochFlowError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
