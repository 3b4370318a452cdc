"""Command-line entry points.

Exit codes: 0 success, 1 validation failure or bad usage, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bounds, harness, io, oracle
from .model import ModelError, validate_model, validate_policies
from .selector import ALGORITHMS, run

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(t) for t in text.split(",") if t]


def _float_list(text):
    return [float(t) for t in text.split(",") if t]


def cmd_check(args):
    model = io.load_model(args.model, validate=False)
    problems = validate_model(model)
    if not problems and args.policies:
        problems = validate_policies(model, io.load_policies(args.policies))
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_generate(args):
    spec = harness.InstanceSpec(
        num_states=args.states, num_actions=args.actions, num_segments=args.segments,
        gamma=args.gamma, beta=args.beta, num_policies=args.policies, seed=args.seed,
        budget=args.budget, force_feasible=args.force_feasible, distinct_values=args.margin is not None,
        margin=args.margin or 0.0, cost_margin=args.cost_margin,
    )
    harness.generate_instance(spec, args.out)
    print(f"wrote {Path(args.out) / 'model.json'} and {Path(args.out) / 'policies.json'}")
    return EXIT_OK


def cmd_oracle(args):
    model = io.load_model(args.model)
    policies = io.load_policies(args.policies, model)
    report = oracle.evaluate(model, policies, args.horizons)
    if args.out:
        io.write_oracle_csv(report, args.out)
    else:
        io.write_csv("/dev/stdout", io.oracle_columns(sorted(report.finite_value)), io.oracle_rows(report))
    if args.budget is not None:
        try:
            best, value = report.optimum(args.budget)
            print(f"optimal: {sorted(best)} value={value!r}", file=sys.stderr)
        except oracle.InfeasibleProblem as exc:
            print(f"infeasible problem: {exc}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args):
    model = io.load_model(args.model)
    policies = io.load_policies(args.policies, model)
    trace = run(args.algorithm, model, policies, args.budget, args.N, args.H, args.seed, args.replication)
    trace.write_csv(args.out)
    print(f"pi(N) = {int(trace.chosen[-1])}; trace written to {args.out}")
    return EXIT_OK


def cmd_experiment(args):
    overrides = {
        "replications": args.replications, "seed": args.seed, "output": args.out,
        "iterations": args.N, "horizons": args.H, "epsilons": args.epsilon, "budget": args.budget,
    }
    config = harness.ExperimentConfig.from_file(args.config, **overrides)
    result = harness.run_experiment(config)
    print(f"results in {config.output}")
    return EXIT_OK if result.ok else EXIT_RUNTIME


def cmd_bounds(args):
    out = {}
    alpha = args.alphaH
    r_h = None
    if args.model and args.H is not None:
        const = bounds.truncation_constants(io.load_model(args.model), args.H)
        alpha, r_h = const.alpha_H, const.r_H
        out.update(alpha_H=alpha, r_H=r_h)
    if args.epsilon is not None and alpha is not None and args.policies and args.N:
        out["theorem1"] = bounds.theorem1_bound(args.policies, args.epsilon, alpha, args.N)
        out["theorem1_raw"] = bounds.theorem1_bound(args.policies, args.epsilon, alpha, args.N, clamp=False)
        out["sandwich_rate"] = bounds.sandwich_rate(args.epsilon, alpha)
    if args.model and args.policy_file and args.H is not None:
        model = io.load_model(args.model)
        pols = io.load_policies(args.policy_file, model)
        rep = oracle.evaluate(model, pols, [args.H])
        gs = bounds.gap_structure(rep.finite_value[args.H])
        out["min_gap"] = gs.min_positive_gap
        if args.N:
            for algo in ALGORITHMS:
                out[f"regret_bound_{algo}"] = bounds.regret_bound(gs, args.N, algo, args.delta).value
    if not out:
        print("nothing to compute; see --help", file=sys.stderr)
        return EXIT_INVALID
    for k, v in out.items():
        print(f"{k} = {v!r}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="sleepcmdp", description="Simulation-based policy selection for constrained MDPs.")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="validate model/policy files")
    c.add_argument("--model", required=True)
    c.add_argument("--policies")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("generate", help="draw a random normalised instance")
    g.add_argument("--out", required=True)
    g.add_argument("--states", type=int, default=5)
    g.add_argument("--actions", type=int, default=2)
    g.add_argument("--segments", type=int, default=2)
    g.add_argument("--gamma", type=float, default=0.8)
    g.add_argument("--beta", type=float, default=0.8)
    g.add_argument("--policies", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--budget", type=float)
    g.add_argument("--force-feasible", action="store_true")
    g.add_argument("--margin", type=float, help="require distinct exact values separated by this margin")
    g.add_argument("--cost-margin", type=float, default=0.0)
    g.set_defaults(func=cmd_generate)

    o = sub.add_parser("oracle", help="exact values and costs of every policy")
    o.add_argument("--model", required=True)
    o.add_argument("--policies", required=True)
    o.add_argument("--horizons", type=_int_list, default=[])
    o.add_argument("--budget", type=float)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    r = sub.add_parser("run", help="one FTAL or AUER run")
    r.add_argument("--model", required=True)
    r.add_argument("--policies", required=True)
    r.add_argument("--algorithm", choices=ALGORITHMS, type=str.upper, default="FTAL")
    r.add_argument("--budget", type=float, required=True)
    r.add_argument("--N", type=int, required=True)
    r.add_argument("--H", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--replication", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("experiment", help="replicated sweep from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--out")
    e.add_argument("--replications", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--budget", type=float)
    e.add_argument("--N", type=_int_list)
    e.add_argument("--H", type=_int_list)
    e.add_argument("--epsilon", type=_float_list)
    e.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bounds", help="evaluate the closed-form guarantees")
    b.add_argument("--epsilon", type=float)
    b.add_argument("--alphaH", type=float)
    b.add_argument("--policies", type=int)
    b.add_argument("--N", type=int)
    b.add_argument("--H", type=int)
    b.add_argument("--delta", type=float)
    b.add_argument("--model")
    b.add_argument("--policy-file")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ModelError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
