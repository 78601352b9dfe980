"""Command-line entry point.

Subcommands: run (one task cell over seeds), suite (TOML-config batch),
render (re-emit SVGs for a stored run), check (numerical self-tests).
Exit codes: 0 success, 1 task failure (target cost not reached by any
seed), 2 configuration or transport error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import MopsError, ConfigError
from .runner import RunConfig, load_run, render_record, run_suite, run_task, save_run

_CONFIG_FIELDS = {f.name for f in dataclass_fields(RunConfig)}


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"seeds must be comma-separated integers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mops",
        description="Language-conditioned plan templates, tuned by "
                    "black-box search over a trajectory solver.")
    parser.add_argument("--version", action="version", version=f"mops {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one task over a set of seeds")
    run.add_argument("--domain", choices=("draw", "push"))
    run.add_argument("--task", required=True)
    run.add_argument("--optimizer", choices=("cmaes", "hillclimb", "random"),
                     default="cmaes")
    run.add_argument("--budget", type=int)
    run.add_argument("--seeds", type=str, default="0,1,2,3,4",
                     help="comma-separated integers")
    run.add_argument("--proposer", default="scripted:good",
                     help="scripted:<flavor> or llm[:model]")
    run.add_argument("--out", type=Path, help="directory for run artifacts")
    run.add_argument("--max-feedback", type=int, default=2)
    run.add_argument("--sigma0", type=float)
    run.add_argument("--target-cost", type=float)
    run.add_argument("--steps-per-phase", type=int, default=8)
    run.add_argument("--popsize", type=int)
    run.add_argument("--workers", type=int, default=1,
                     help="threads for candidate evaluation")

    suite = sub.add_parser("suite", help="run a batch described by a TOML file")
    suite.add_argument("--config", type=Path, required=True)
    suite.add_argument("--out", type=Path)
    suite.add_argument("--workers", type=int, default=1,
                       help="threads across seeds")

    render = sub.add_parser("render", help="re-emit SVGs for a stored run")
    render.add_argument("--run", type=Path, required=True,
                        help="directory containing record.json")

    sub.add_parser("check", help="numerical and parser self-tests")
    return parser


def _load_toml(path: Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}")


def _make_config(raw: dict) -> RunConfig:
    unknown = set(raw) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "seeds" in raw:
        raw = dict(raw)
        raw["seeds"] = tuple(int(s) for s in raw["seeds"])
    try:
        return RunConfig(**raw).resolved()
    except TypeError as exc:
        raise ConfigError(f"bad run config: {exc}")


def _suite_configs(doc: dict) -> list[RunConfig]:
    defaults = doc.get("defaults", {})
    runs = doc.get("run", [])
    if not isinstance(runs, list) or not runs:
        raise ConfigError("suite config needs at least one [[run]] table")
    return [_make_config({**defaults, **entry}) for entry in runs]


def _cmd_run(args) -> int:
    cfg = RunConfig(
        task=args.task,
        domain=args.domain,
        optimizer=args.optimizer,
        budget=args.budget,
        max_feedback=args.max_feedback,
        sigma0=args.sigma0,
        seeds=_parse_seeds(args.seeds),
        proposer=args.proposer,
        target_cost=args.target_cost,
        steps_per_phase=args.steps_per_phase,
        popsize=args.popsize,
    ).resolved()
    reached = False
    for seed in cfg.seeds:
        record = run_task(cfg, seed, workers=args.workers)
        if args.out is not None:
            save_run(record, args.out / f"{cfg.task}-{cfg.optimizer}-seed{seed}")
        final = record.final_cost
        ok = final <= cfg.target_cost
        reached = reached or ok
        final_text = f"{final:.6g}" if math.isfinite(final) else "inf"
        print(f"seed {seed}: final cost {final_text} "
              f"(target {cfg.target_cost:.6g}) metric {record.metric:.4f} "
              f"evals {record.total_evaluations} "
              f"[{'ok' if ok else 'target missed'}]")
    if args.out is not None:
        print(f"artifacts written to {args.out}")
    return 0 if reached else 1


def _cmd_suite(args) -> int:
    doc = _load_toml(args.config)
    workers = int(doc.get("workers", args.workers))
    configs = _suite_configs(doc)
    summary = run_suite(configs, out_dir=args.out, workers=workers)
    for row in summary["rows"]:
        print(f"{row['task']:<10} {row['optimizer']:<10} "
              f"metric {row['mean_metric']:.4f} "
              f"+- {row['interval_half_width']:.4f} "
              f"(seeds {','.join(str(s) for s in row['seeds'])})")
    if args.out is not None:
        print(f"summary written to {args.out / 'summary.json'}")
    return 0


def _cmd_render(args) -> int:
    record = load_run(args.run)
    written = render_record(record, args.run)
    for path in written:
        print(path)
    return 0


# ---------------------------------------------------------------------------
# Self-test battery


def _check_gradients() -> tuple[bool, str]:
    from .nlp import (NLPSpec, ConstraintInstance, constraints_eval,
                      objective_value_grad)

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        T = int(rng.integers(6, 14))
        n = int(rng.integers(2, 4))
        constraints = (
            ConstraintInstance.start_at(rng.normal(size=n)),
            ConstraintInstance.point_at(T - 1, rng.normal(size=n)),
            ConstraintInstance.min_clearance(
                1, T - 1, rng.normal(size=n), 0.3),
        )
        spec = NLPSpec(horizon=T, dim=n, constraints=constraints,
                       phase_bounds=((0, T),), dt=0.1)
        x = spec.trajectory(rng.normal(size=(T, n)))
        _, grad = objective_value_grad(spec, x)
        grad = grad.reshape(-1)
        flat = x.data.reshape(-1).copy()
        eps = 1e-6
        for k in range(0, flat.size, max(1, flat.size // 7)):
            bumped = flat.copy()
            bumped[k] += eps
            up, _ = objective_value_grad(spec, spec.trajectory(bumped.reshape(T, n)))
            bumped[k] -= 2 * eps
            dn, _ = objective_value_grad(spec, spec.trajectory(bumped.reshape(T, n)))
            fd = (up - dn) / (2 * eps)
            denom = max(1.0, abs(fd))
            worst = max(worst, abs(fd - grad[k]) / denom)
        h, g, Jh, Jg = constraints_eval(spec, x)
        for k in range(0, flat.size, max(1, flat.size // 5)):
            bumped = flat.copy()
            bumped[k] += eps
            h_up, g_up, _, _ = constraints_eval(spec, spec.trajectory(bumped.reshape(T, n)))
            bumped[k] -= 2 * eps
            h_dn, g_dn, _, _ = constraints_eval(spec, spec.trajectory(bumped.reshape(T, n)))
            if h.size:
                worst = max(worst, float(np.max(np.abs((h_up - h_dn) / (2 * eps) - Jh[:, k]))))
            if g.size:
                worst = max(worst, float(np.max(np.abs((g_up - g_dn) / (2 * eps) - Jg[:, k]))))
    return worst < 1e-5, f"max gradient deviation {worst:.2e}"


def _check_solver() -> tuple[bool, str]:
    from .nlp import NLPSpec, ConstraintInstance
    from .solver import solve

    T, n = 12, 2
    a, b = np.array([0.0, 1.0]), np.array([2.0, -1.0])
    spec = NLPSpec(horizon=T, dim=n, constraints=(
        ConstraintInstance.start_at(a),
        ConstraintInstance.point_at(T - 1, b),
    ), phase_bounds=((0, T),), dt=0.1)
    sol = solve(spec)
    straight = np.linspace(a, b, T)
    err = float(np.max(np.abs(sol.x.data - straight)))
    return sol.converged and err < 1e-6, f"line deviation {err:.2e}"


def _check_bbo() -> tuple[bool, str]:
    from .bbo import BBOProblem, minimize

    problem = BBOProblem(dim=5, x0=(1.0,) * 5, sigma0=0.3, budget=1200, seed=3)
    result = minimize("cmaes", lambda x: float(x @ x), problem)
    return result.best_cost < 1e-8, f"sphere best {result.best_cost:.2e}"


def _check_costs() -> tuple[bool, str]:
    from .draw import StrokeSet, cost_pentagon
    from .push import cost_circle

    angles = np.pi / 2 + 2 * np.pi * np.arange(5) / 5
    pts = 120.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1) + 320.0
    starts = pts
    vecs = np.roll(pts, -1, axis=0) - pts
    pentagon = cost_pentagon(StrokeSet(starts, vecs))
    ring_angles = 2 * np.pi * np.arange(6) / 6
    ring = 0.2 * np.stack([np.cos(ring_angles), np.sin(ring_angles)], axis=1)
    circle = cost_circle(ring)
    ok = pentagon < 1e-9 and circle < 1e-12
    return ok, f"pentagon {pentagon:.2e}, circle {circle:.2e}"


def _check_dsl() -> tuple[bool, str]:
    from . import dsl
    from .proposer import DRAW_EXAMPLE_SQUARE, PUSH_EXAMPLE_SINGLE

    for text in (DRAW_EXAMPLE_SQUARE, PUSH_EXAMPLE_SINGLE):
        t1 = dsl.parse(text)
        t2 = dsl.parse(dsl.format_template(t1))
        if t1 != t2:
            return False, "round-trip mismatch"
    return True, "round-trips stable"


def self_check() -> list[tuple[str, bool, str]]:
    checks = [
        ("gradients-vs-finite-differences", _check_gradients),
        ("solver-straight-line", _check_solver),
        ("cmaes-sphere", _check_bbo),
        ("cost-zero-references", _check_costs),
        ("dsl-round-trip", _check_dsl),
    ]
    results = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results


def _cmd_check(_args) -> int:
    results = self_check()
    failures = 0
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "suite": _cmd_suite,
        "render": _cmd_render,
        "check": _cmd_check,
    }
    try:
        return handlers[args.command](args)
    except MopsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
