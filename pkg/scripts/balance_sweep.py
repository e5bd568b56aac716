"""Balance meta-parameter sweep on Gray-Scott.

Runs NRAB at several balance probabilities and reports, per balance, the
mean final global and constrained diversity and acceptance over seeds.
Shows the constrained/global trade-off a user steers with the balance
slider.
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from roiexplore.experiments import ExperimentPlan, run_balance_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-dir", default="results/balance_sweep")
    parser.add_argument("--seeds", type=int, default=5,
                        help="number of seeds per balance value")
    parser.add_argument("--budget", type=int, default=1000)
    parser.add_argument("--n-init", type=int, default=250)
    parser.add_argument("--balances", type=float, nargs="+",
                        default=[0.0, 0.25, 0.5, 0.75, 1.0])
    args = parser.parse_args()

    plan = ExperimentPlan(
        system="gray_scott",
        methods=("NRAB",),
        seeds=tuple(range(args.seeds)),
        budget=args.budget,
        n_init=args.n_init,
        roi={"volume": [0.6, 0.7]},
        balance_sweep=tuple(args.balances),
        output_dir=args.output_dir,
    )
    out = run_balance_sweep(plan)

    rows = defaultdict(list)
    with open(Path(out) / "balance_sweep.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            rows[float(row["balance_prob"])].append(
                (float(row["acceptance_rate"]),
                 int(row["global_diversity"]),
                 int(row["constrained_diversity"])))
    for balance in sorted(rows):
        acc, g, c = np.mean(rows[balance], axis=0)
        print(f"balance {balance:4.2f}  acceptance {acc:7.2%}  "
              f"global {g:8.1f}  constrained {c:8.1f}")
    print(f"results in {out}")


if __name__ == "__main__":
    main()
