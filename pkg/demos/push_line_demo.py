"""Push four blocks into a straight line and report where they ended up.

Uses the deterministic quasi-static push simulator; the cost is the
line-fit residual plus an even-spacing term, so a good run leaves the
blocks collinear and equally spaced.
"""
import argparse

from mops.runner import RunConfig, run_task
from mops.tasks import build_scene

ap = argparse.ArgumentParser()
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

cfg = RunConfig(task="line", optimizer="cmaes", budget=1500,
                max_feedback=2, proposer="scripted:good")
record = run_task(cfg, seed=args.seed)

print(f"final cost {record.final_cost:.6g}, metric {record.metric:.4f}")
print("before:")
for frame in build_scene("line").blocks():
    x, y = frame.xy
    print(f"  {frame.name}: ({x:.3f}, {y:.3f})")
print("after:")
print("  " + record.iterations[-1].state_summary.replace("\n", "\n  "))
