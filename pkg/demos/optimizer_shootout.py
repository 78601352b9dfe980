"""Compare the three parameter optimizers on one drawing task.

Same scripted proposal, same budget, several seeds each; prints the
per-seed final costs and the median per method. CMA-ES should win,
random sampling should trail badly in 10+ dimensions.
"""
import argparse

import numpy as np

from mops.runner import RunConfig, run_task

METHODS = ("cmaes", "hillclimb", "random")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--task", default="pentagon",
                    choices=["pentagon", "star", "hash"])
    ap.add_argument("--budget", type=int, default=1000)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    for method in METHODS:
        finals = []
        for seed in range(args.seeds):
            cfg = RunConfig(task=args.task, optimizer=method,
                            budget=args.budget, max_feedback=0,
                            proposer="scripted:good", target_cost=0.0)
            finals.append(run_task(cfg, seed).final_cost)
        joined = ", ".join(f"{c:.4g}" for c in finals)
        print(f"{method:>9}: median {np.median(finals):.4g}   [{joined}]")


if __name__ == "__main__":
    main()
