"""Run the full three-level loop on the pentagon drawing task, offline.

The scripted 'good' proposer stands in for a language model, so this
runs with no network access and is reproducible per seed. Artifacts
(record.json, evals.jsonl, SVG plots) land in the output directory.
"""
import argparse
from pathlib import Path

from mops.runner import RunConfig, run_task, save_run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=1000)
    ap.add_argument("--out", type=Path, default=Path("out/pentagon_demo"))
    args = ap.parse_args()

    cfg = RunConfig(task="pentagon", optimizer="cmaes", budget=args.budget,
                    max_feedback=2, proposer="scripted:good")
    record = run_task(cfg, seed=args.seed)

    for it in record.iterations:
        print(f"iteration {it.index}: best cost {it.best_cost:.6g} "
              f"after {it.evaluations} evaluations")
    print(f"final cost {record.final_cost:.6g}, "
          f"metric {record.metric:.4f} "
          f"(normalizer {record.max_error:.6g})")
    print(record.iterations[-1].state_summary)

    save_run(record, args.out)
    print(f"artifacts in {args.out}/ "
          f"(rollout.svg shows the strokes on the board)")


if __name__ == "__main__":
    main()
