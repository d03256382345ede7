"""Command-line driver.

Exit codes: 0 success, 1 usage or config error, 2 infeasible problem.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import experiments
from .dual import bisection_search, write_trace_csv
from .dynamics import FILTERS, action_table
from .mdp import PolicyError, backward_induction, evaluate_policy_exact, read_policy_csv, write_policy_csv
from .scenario import ConfigError, load_config
from .sim import monte_carlo

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2

log = logging.getLogger("noma_v2i")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not values:
        raise argparse.ArgumentTypeError("grid must not be empty")
    return values


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    res = bisection_search(cfg, args.epsilon, args.filter)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    values = backward_induction(cfg, res.lambda_star, args.filter)
    write_policy_csv(cfg, res.policy, values, out / "policy.csv")
    write_trace_csv(res.trace, out / "trace.csv")
    summary = {
        "feasible": res.feasible,
        "lambda_star": res.lambda_star,
        "expected_capacity": res.eval.expected_capacity,
        "outage_prob": res.eval.outage_prob,
        "delta": cfg.delta,
        "lagrangian": res.eval.lagrangian_at(res.lambda_star),
        "doubling_probes": res.doubling_probes,
        "bisection_probes": res.bisection_probes,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_sweep_lambda(args) -> int:
    cfg = load_config(args.config)
    filters = args.filter or list(FILTERS)
    if args.lambda_grid:
        grid = args.lambda_grid
    else:
        grid = experiments.default_lambda_grid(cfg)
        grid.append(bisection_search(cfg, args.epsilon, "full").lambda_star)
    rows = experiments.sweep_lambda(cfg, grid, filters)
    _emit(experiments.rows_to_csv(rows, experiments.SWEEP_COLUMNS), args.out)
    return EXIT_OK


def cmd_delta_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.realizations < 1:
        raise UsageError("--realizations must be >= 1")
    rows = experiments.delta_sweep(cfg, args.delta_grid, args.realizations, args.seed,
                                   args.filter or list(FILTERS), args.epsilon)
    _emit(experiments.rows_to_csv(rows, experiments.DELTA_COLUMNS), args.out)
    for r in rows:
        if r.infeasible:
            log.warning("%s, delta=%g: %d infeasible realizations excluded",
                        r.filter, r.delta, r.infeasible)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.episodes < 1:
        raise UsageError("--episodes must be >= 1")
    cfg = load_config(args.config)
    policy = read_policy_csv(cfg, args.policy)
    mc = monte_carlo(cfg, policy, args.lam, args.episodes, args.seed)
    ev = evaluate_policy_exact(cfg, policy)
    exact_return = ev.lagrangian_at(args.lam)
    report = {
        "episodes": mc.episodes,
        "lambda": args.lam,
        "mc_capacity": mc.capacity_mean, "mc_capacity_se": mc.capacity_se,
        "mc_outage": mc.outage, "mc_outage_se": mc.outage_se,
        "mc_return": mc.return_mean, "mc_return_se": mc.return_se,
        "exact_capacity": ev.expected_capacity,
        "exact_outage": ev.outage_prob,
        "exact_return": exact_return,
        "return_z": (mc.return_mean - exact_return) / mc.return_se if mc.return_se > 0 else 0.0,
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_table(args) -> int:
    cfg = load_config(args.config)
    table = action_table(cfg)
    lines = []
    header = ["index", "order", "V1", "V2", "r1", "r2", "p1", "p2"]
    for i, a in enumerate(table.actions):
        v1, v2 = cfg.power_set[a.power_idx]
        lines.append([i, a.order.label, repr(v1), repr(v2), a.r1, a.r2,
                      repr(float(table.p1[i])), repr(float(table.p2[i]))])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(lines)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noma-v2i", description="Dynamic power/rate allocation for two-user NOMA V2I.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help):
        sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--out", help=out_help)

    def filters(sp):
        sp.add_argument("--filter", action="append", choices=FILTERS,
                        help="action filter (repeatable; default: all three)")

    sp = sub.add_parser("solve", help="bisection on the multiplier, write policy/trace/summary")
    common(sp, "output directory (default: .)")
    sp.add_argument("--epsilon", type=float, default=1e-6)
    sp.add_argument("--filter", choices=FILTERS, default="full")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep-lambda", help="return/outage/capacity of pi_lambda over a grid")
    common(sp, "CSV file (default: stdout)")
    sp.add_argument("--lambda-grid", type=_float_list, help="comma-separated multipliers")
    sp.add_argument("--epsilon", type=float, default=1e-6)
    filters(sp)
    sp.set_defaults(func=cmd_sweep_lambda)

    sp = sub.add_parser("delta-sweep", help="mean capacity over random placements per outage target")
    common(sp, "CSV file (default: stdout)")
    sp.add_argument("--delta-grid", type=_float_list, default=[0.02, 0.05, 0.1, 0.2])
    sp.add_argument("--realizations", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epsilon", type=float, default=1e-6)
    filters(sp)
    sp.set_defaults(func=cmd_delta_sweep)

    sp = sub.add_parser("simulate", help="Monte-Carlo check of a policy file against exact evaluation")
    common(sp, "JSON report file (default: stdout)")
    sp.add_argument("--policy", required=True, help="policy CSV written by 'solve'")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--episodes", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("table", help="per-action success probabilities as CSV")
    common(sp, "CSV file (default: stdout)")
    sp.set_defaults(func=cmd_table)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, PolicyError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
