"""Lenia method comparison: acceptance rates and diversity curves.

Same protocol as the Gray-Scott table but on the 41-parameter Lenia
system, whose rollouts are roughly 5x slower; expect ~25 CPU-minutes at
the default sizes.
"""

import argparse

from roiexplore.experiments import ExperimentPlan, run_plan, summarize


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-dir", default="results/lenia_table")
    parser.add_argument("--seeds", type=int, default=10,
                        help="number of seeds per method")
    parser.add_argument("--budget", type=int, default=1000)
    parser.add_argument("--n-init", type=int, default=250)
    args = parser.parse_args()

    plan = ExperimentPlan(
        system="lenia",
        methods=("R", "N", "NRA", "NRAB"),
        seeds=tuple(range(args.seeds)),
        budget=args.budget,
        n_init=args.n_init,
        roi={"volume": [0.6, 0.7]},
        output_dir=args.output_dir,
    )
    out = run_plan(plan)
    for method, stats in summarize(out).items():
        print(f"{method:5s} acceptance {stats['acceptance_rate']:7.2%}  "
              f"time/sample {stats['time_per_sample_s'] * 1e3:6.1f} ms  "
              f"({stats['n_runs']} runs)")
    print(f"results in {out}")


if __name__ == "__main__":
    main()
