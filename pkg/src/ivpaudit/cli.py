"""Command-line interface.

Subcommands: audit, calibrate, check-dp, generic-check, generic-index,
attack, simulate.  Node indices on the command line and in JSON output are
1-based to match system files.  Every randomized command requires --seed and
is fully deterministic given its argument list.  Exit codes: 0 success,
2 invalid input, 3 numerical conditioning failure.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys

import numpy as np

from . import dp, generic, intrinsic, sim
from .errors import ConditioningError, ValidationError
from .obsv import build_bundle
from .sysmodel import LinearSystem, load_structure, load_system


def _parse_nodes(text: str) -> tuple:
    """Comma-separated 1-based node list ('' means empty)."""
    text = (text or "").strip()
    if not text:
        return ()
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            val = int(part)
        except ValueError:
            raise ValidationError(f"node list: {part!r} is not an integer") from None
        if val < 1:
            raise ValidationError(f"node list: indices are 1-based, got {val}")
        out.append(val - 1)
    return tuple(out)


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(p) for p in text.split(",") if p.strip() != ""])
    except ValueError:
        raise ValidationError(f"vector: could not parse {text!r}") from None


def _parse_vectors(text: str) -> list:
    vecs = [_parse_vector(part) for part in text.split(";") if part.strip() != ""]
    if not vecs:
        raise ValidationError("vector list: empty")
    return vecs


def _require_lti(system) -> LinearSystem:
    if not isinstance(system, LinearSystem):
        raise ValidationError("system: this command requires a time-invariant system")
    return system


def cmd_audit(args) -> dict:
    system = _require_lti(load_system(args.system))
    bundle = build_bundle(system, args.T)
    whole = intrinsic.whole_vector_private(system, rank_tol=args.rank_tol)
    report = intrinsic.privacy_index(system, rank_tol=args.rank_tol)
    out = {
        "n": system.n,
        "m": system.m,
        "T": bundle.T,
        "whole_vector_private": bool(whole.private),
        "rank_Oob": report.rank_Oob,
        "index": report.index,
    }
    if report.note:
        out["note"] = report.note
    if args.node:
        P = _parse_nodes(args.public)
        verdicts = []
        for i in _parse_nodes(args.node):
            v = intrinsic.node_private(system, i, P, rank_tol=args.rank_tol)
            verdicts.append(v.to_dict(one_based=True))
        out["nodes"] = verdicts
    return out


def cmd_calibrate(args) -> dict:
    system = _require_lti(load_system(args.system))
    budget = dp.DpBudget(epsilon=args.epsilon, delta=args.delta, d=args.d, N=args.N, T=args.T)
    floor = dp.calibrate_sigma_omega(system, budget)
    norm_OT = float(np.linalg.norm(build_bundle(system, budget.T).O_T, 2))
    grid = (
        [float(p) for p in args.epsilon_grid.split(",") if p.strip() != ""]
        if args.epsilon_grid is not None
        else [budget.epsilon]
    )
    if not grid:
        raise ValidationError("epsilon-grid: empty grid")
    calibrated = LinearSystem(
        n=system.n,
        m=system.m,
        A=system.A,
        C=system.C,
        noise=type(system.noise).iid(system.noise.sigma_nu, floor),
    )
    table = [
        {"epsilon": eps, "delta_min": dp.delta_min(calibrated, eps, budget.d, budget.N, budget.T)}
        for eps in grid
    ]
    return {
        "sigma_omega_floor": floor,
        "kappa": dp.kappa(budget.epsilon, budget.delta),
        "norm_OT": norm_OT,
        "delta_min_table": table,
    }


def cmd_check_dp(args) -> dict:
    system = _require_lti(load_system(args.system))
    budget = dp.DpBudget(epsilon=args.epsilon, delta=args.delta, d=args.d, N=args.N, T=args.T)
    verdict = dp.check_dp(system, budget, refined=args.refined)
    return verdict.to_dict()


def cmd_generic_check(args) -> dict:
    structure = load_structure(args.structure)
    nodes = _parse_nodes(str(args.node))
    if len(nodes) != 1:
        raise ValidationError("node: expected exactly one 1-based index")
    verdict = generic.generic_node_privacy(
        structure,
        nodes[0],
        _parse_nodes(args.public),
        samples=args.samples,
        seed=args.seed,
        signed=args.signed,
    )
    return verdict.to_dict(one_based=True)


def cmd_generic_index(args) -> dict:
    structure = load_structure(args.structure)
    report = generic.generic_privacy_index(
        structure, samples=args.samples, seed=args.seed, signed=args.signed
    )
    estimate = generic.estimate_generic_rank(
        structure, None, samples=args.samples, seed=args.seed, signed=args.signed
    )
    out = report.to_dict()
    out.update({"samples": estimate.samples, "seed": estimate.seed, "agreement": estimate.agreement})
    return out


def cmd_attack(args) -> dict:
    system = _require_lti(load_system(args.system))
    x0 = _parse_vector(args.x0)
    batch = sim.simulate(system, x0, args.N, args.T, seed=args.seed)
    result = sim.mle_attack(system, batch)
    out = result.to_dict()
    out["N"] = batch.N
    out["T"] = batch.T
    out["seed"] = batch.seed
    if args.save_batch:
        sim.batch_to_csv(batch, args.save_batch)
        out["batch_csv"] = args.save_batch
    if args.empirical_dp:
        if not args.adjacent:
            raise ValidationError("adjacent: --empirical-dp needs --adjacent 'x1,..;x2,..'")
        report = sim.empirical_dp_report(
            system,
            _parse_vectors(args.adjacent),
            args.runs,
            bins=args.bins,
            seed=args.seed,
            delta=args.dp_delta,
            T=args.T,
        )
        payload = report.to_dict()
        if args.hist_csv:
            sim.report_to_csv(report, args.hist_csv)
            payload["hist_csv"] = args.hist_csv
        out["empirical_dp"] = payload
    return out


def cmd_simulate(args) -> dict:
    system = _require_lti(load_system(args.system))
    x0 = _parse_vector(args.x0)
    batch = sim.simulate(system, x0, args.N, args.T, seed=args.seed)
    out = {
        "n": system.n,
        "m": system.m,
        "N": batch.N,
        "T": batch.T,
        "seed": batch.seed,
        "y_mean": [float(v) for v in batch.Y.mean(axis=0)],
        "y_std": [float(v) for v in batch.Y.std(axis=0)],
    }
    if args.out:
        sim.batch_to_csv(batch, args.out)
        out["batch_csv"] = args.out
    return out


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, required=True, help="privacy budget epsilon > 0")
    p.add_argument("--delta", type=float, required=True, help="privacy budget delta in (0, 0.5)")
    p.add_argument("--d", type=float, default=1.0, help="adjacency radius (default 1)")
    p.add_argument("--N", type=int, default=1, help="number of released trajectories (default 1)")
    p.add_argument("--T", type=int, default=None, help="horizon (default n-1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivpaudit",
        description="Audit initial-value privacy of linear dynamical systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="rank-based privacy verdicts and index")
    p.add_argument("--system", required=True, help="system JSON file")
    p.add_argument("--node", default="", help="comma-separated 1-based nodes to test")
    p.add_argument("--public", default="", help="comma-separated 1-based disclosure set")
    p.add_argument("--T", type=int, default=None, help="horizon (default n-1)")
    p.add_argument("--rank-tol", type=float, default=None, help="singular-value cutoff override")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("calibrate", help="measurement-noise floor for a privacy budget")
    p.add_argument("--system", required=True)
    _add_budget_flags(p)
    p.add_argument(
        "--epsilon-grid",
        default=None,
        help="comma-separated epsilons for the delta_min table (default: budget epsilon)",
    )
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("check-dp", help="verify the sufficient privacy condition")
    p.add_argument("--system", required=True)
    _add_budget_flags(p)
    p.add_argument("--refined", action="store_true", help="use the exact whitened-norm condition")
    p.set_defaults(func=cmd_check_dp)

    p = sub.add_parser("generic-check", help="structure-level privacy of one node")
    p.add_argument("--structure", required=True, help="structure JSON file")
    p.add_argument("--node", required=True, help="1-based node index")
    p.add_argument("--public", default="", help="comma-separated 1-based disclosure set")
    p.add_argument("--samples", type=int, default=generic.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--signed", action="store_true", help="sample weights in [-1, 1]")
    p.set_defaults(func=cmd_generic_check)

    p = sub.add_parser("generic-index", help="structure-level privacy index")
    p.add_argument("--structure", required=True)
    p.add_argument("--samples", type=int, default=generic.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--signed", action="store_true")
    p.set_defaults(func=cmd_generic_index)

    p = sub.add_parser("attack", help="estimate the initial value from released trajectories")
    p.add_argument("--system", required=True)
    p.add_argument("--x0", required=True, help="true initial value, comma-separated")
    p.add_argument("--N", type=int, required=True, help="number of trajectories")
    p.add_argument("--T", type=int, default=None, help="horizon (default n-1)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--save-batch", default=None, help="write the simulated batch to CSV")
    p.add_argument("--empirical-dp", action="store_true", help="also run the histogram probe")
    p.add_argument("--adjacent", default=None, help="semicolon-separated initial values")
    p.add_argument("--runs", type=int, default=10000, help="mechanism draws per initial value")
    p.add_argument("--bins", type=int, default=None, help="histogram bin count (default FD rule)")
    p.add_argument("--dp-delta", type=float, default=0.0, help="delta for the empirical epsilon")
    p.add_argument("--hist-csv", default=None, help="write histogram counts to CSV")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("simulate", help="simulate output trajectories")
    p.add_argument("--system", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None, help="write the batch to CSV")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except ConditioningError as exc:
        print(f"conditioning error: {exc}", file=_sys.stderr)
        return 3
    print(json.dumps(payload, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
