"""Command-line entry point.

    explore run --plan plan.json        execute an experiment plan
    explore sweep-balance --plan p.json run the balance meta-parameter sweep
    explore summarize <dir>             print the acceptance/timing table
    explore serve [--host H] [--port P] start the session service
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import ExperimentPlan, run_balance_sweep, run_plan, summarize


def _cmd_run(args: argparse.Namespace) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    out = run_plan(plan)
    print(f"results written to {out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    out = run_balance_sweep(plan)
    print(f"sweep results written to {out}")
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    summary = summarize(args.dir)
    order = ("R", "N", "NRA", "NRAB")
    methods = sorted(summary, key=lambda m: (order.index(m)
                                             if m in order else len(order)))
    print(f"{'method':<8}{'acceptance':>12}{'time/sample':>14}"
          f"{'time/inlier':>14}{'runs':>6}")
    for m in methods:
        s = summary[m]
        print(f"{m:<8}{s['acceptance_rate']:>11.2%}"
              f"{s['time_per_sample_s'] * 1e3:>11.1f} ms"
              f"{s['time_per_inlier_s']:>12.3f} s{s['n_runs']:>6}")
    if args.json:
        print(json.dumps(summary, indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="explore",
        description="ROI-steerable diversity exploration of grid systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment plan")
    p_run.add_argument("--plan", required=True, help="JSON plan file")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep-balance",
                             help="sweep the balance meta-parameter")
    p_sweep.add_argument("--plan", required=True, help="JSON plan file")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_sum = sub.add_parser("summarize",
                           help="aggregate acceptance/timing per method")
    p_sum.add_argument("dir", help="result directory of a previous run")
    p_sum.add_argument("--json", action="store_true",
                       help="also dump the summary as JSON")
    p_sum.set_defaults(func=_cmd_summarize)

    p_serve = sub.add_parser("serve", help="start the HTTP session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
