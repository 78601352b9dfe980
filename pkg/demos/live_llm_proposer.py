"""Point the proposer at a real chat-completions endpoint.

Without MOPS_API_KEY this prints the exact prompt the model would
receive and stops, so it is safe to run offline. With a key set (and
optionally MOPS_API_BASE for a non-default endpoint) it requests one
plan template, parses it, and runs a short optimization round.
"""
import os
import sys

from mops.proposer import build_prompt, make_backend, propose
from mops.runner import RunConfig, run_task
from mops.tasks import build_scene, get_task

task = get_task("pentagon")
scene = build_scene("pentagon")
messages = build_prompt(task, scene)

if not os.environ.get("MOPS_API_KEY"):
    print("MOPS_API_KEY is not set; printing the prompt instead.\n")
    for msg in messages:
        print(f"--- {msg['role']} " + "-" * 50)
        print(msg["content"])
    sys.exit(0)

model = os.environ.get("MOPS_MODEL", "gpt-4o-mini")
template, text = propose(make_backend(f"llm:{model}"), messages)
print("model returned this template:\n")
print(text)

cfg = RunConfig(task="pentagon", optimizer="cmaes", budget=300,
                max_feedback=0, proposer=f"llm:{model}")
record = run_task(cfg, seed=0)
print(f"final cost {record.final_cost:.6g}, metric {record.metric:.4f}")
