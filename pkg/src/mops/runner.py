"""Meta-optimization loop and experiment bookkeeping.

run_task drives one seeded run: propose a plan template, tune its
continuous parameters with a black-box optimizer (each candidate is
lowered to a trajectory problem, solved, rolled out and scored), then
feed the result back to the proposer for up to max_feedback revisions.
Everything a run produces is captured in a RunRecord that serializes to
JSON and renders to SVG.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .bbo import BBOProblem, make_optimizer
from .draw import StrokeSet
from .dsl import PlanTemplate, instantiate, parse
from .errors import ConfigError, EmptyRecord, MopsError, NonPositiveNormalizer
from .nlp import actions_to_nlp
from .proposer import build_feedback, build_prompt, make_backend, propose
from .push import PushTrace
from .solver import SolverOptions, default_init, solve
from .svg import render_curve, render_push, render_strokes
from .tasks import TaskSpec, build_scene, get_task, null_plan_cost, rollout_and_cost
from .trajectory import Trajectory

DEFAULT_BUDGET = {"draw": 1000, "push": 1500}
DEFAULT_SIGMA0 = {"draw": 0.01, "push": 0.05}
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class RunConfig:
    """One experiment cell. None fields resolve to per-task defaults."""

    task: str
    domain: str | None = None
    optimizer: str = "cmaes"
    budget: int | None = None
    max_feedback: int = 2
    sigma0: float | None = None
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    proposer: str = "scripted:good"
    target_cost: float | None = None
    max_error: float | None = None
    cost_offset: float | None = None
    steps_per_phase: int = 8
    dt: float = 0.1
    popsize: int | None = None
    p_accept: float = 0.05
    solver_tol_constraint: float = 1e-6
    solver_tol_stationarity: float = 1e-6
    solver_rho_init: float = 1e6
    solver_rho_growth: float = 10.0
    solver_rho_max: float = 1e8
    solver_max_outer: int = 12
    solver_max_inner: int = 25

    def resolved(self) -> "RunConfig":
        spec = get_task(self.task)
        domain = self.domain if self.domain is not None else spec.domain
        if domain != spec.domain:
            raise ConfigError(
                f"task {self.task!r} belongs to domain {spec.domain!r}, "
                f"config says {domain!r}")
        cfg = replace(
            self,
            domain=domain,
            budget=self.budget if self.budget is not None else DEFAULT_BUDGET[domain],
            sigma0=self.sigma0 if self.sigma0 is not None else DEFAULT_SIGMA0[domain],
            seeds=tuple(int(s) for s in self.seeds),
            target_cost=(self.target_cost if self.target_cost is not None
                         else spec.target_cost),
            cost_offset=(self.cost_offset if self.cost_offset is not None
                         else spec.cost_offset),
        )
        if cfg.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {cfg.budget}")
        if cfg.max_feedback < 0:
            raise ConfigError(f"max_feedback must be >= 0, got {cfg.max_feedback}")
        if cfg.sigma0 <= 0:
            raise ConfigError(f"sigma0 must be > 0, got {cfg.sigma0}")
        if cfg.steps_per_phase < 3:
            raise ConfigError(f"steps_per_phase must be >= 3, got {cfg.steps_per_phase}")
        return cfg

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol_constraint=self.solver_tol_constraint,
            tol_stationarity=self.solver_tol_stationarity,
            rho_init=self.solver_rho_init,
            rho_growth=self.solver_rho_growth,
            rho_max=self.solver_rho_max,
            max_outer=self.solver_max_outer,
            max_inner=self.solver_max_inner,
        )


@dataclass
class IterationRecord:
    """One proposal plus its optimization round."""

    index: int
    messages: list
    template_text: str
    costs: list
    history: list
    best_cost: float
    best_alpha: list
    best_trajectory: dict | None
    state_summary: str
    evaluations: int
    elapsed_s: float


@dataclass
class RunRecord:
    config: dict
    seed: int
    scene: dict
    max_error: float
    cost_offset: float
    iterations: list = field(default_factory=list)
    final_cost: float = math.inf
    metric: float = 0.0
    timings: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def total_evaluations(self) -> int:
        return sum(rec.evaluations for rec in self.iterations)

    def best_iteration(self) -> IterationRecord:
        if not self.iterations:
            raise EmptyRecord("run record has no iterations")
        return min(self.iterations, key=lambda rec: rec.best_cost)

    def to_dict(self) -> dict:
        def num(v):
            v = float(v)
            return v if math.isfinite(v) else None

        return {
            "version": self.version,
            "config": self.config,
            "seed": self.seed,
            "scene": self.scene,
            "max_error": num(self.max_error),
            "cost_offset": float(self.cost_offset),
            "final_cost": num(self.final_cost),
            "metric": float(self.metric),
            "timings": self.timings,
            "iterations": [
                {
                    "index": rec.index,
                    "messages": rec.messages,
                    "template_text": rec.template_text,
                    "costs": [num(c) for c in rec.costs],
                    "history": [[int(i), num(c)] for i, c in rec.history],
                    "best_cost": num(rec.best_cost),
                    "best_alpha": [float(a) for a in rec.best_alpha],
                    "best_trajectory": rec.best_trajectory,
                    "state_summary": rec.state_summary,
                    "evaluations": rec.evaluations,
                    "elapsed_s": rec.elapsed_s,
                }
                for rec in self.iterations
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "RunRecord":
        def num(v):
            return math.inf if v is None else float(v)

        record = RunRecord(
            config=d["config"],
            seed=int(d["seed"]),
            scene=d["scene"],
            max_error=num(d["max_error"]),
            cost_offset=float(d["cost_offset"]),
            final_cost=num(d["final_cost"]),
            metric=float(d["metric"]),
            timings=d.get("timings", {}),
            version=d.get("version", __version__),
        )
        for rd in d["iterations"]:
            record.iterations.append(IterationRecord(
                index=int(rd["index"]),
                messages=rd["messages"],
                template_text=rd["template_text"],
                costs=[num(c) for c in rd["costs"]],
                history=[(int(i), num(c)) for i, c in rd["history"]],
                best_cost=num(rd["best_cost"]),
                best_alpha=[float(a) for a in rd["best_alpha"]],
                best_trajectory=rd["best_trajectory"],
                state_summary=rd["state_summary"],
                evaluations=int(rd["evaluations"]),
                elapsed_s=float(rd["elapsed_s"]),
            ))
        return record


def normalized_performance(cost: float, max_error: float) -> float:
    """1 - log(1+cost)/log(1+max_error), clamped to [0, 1]."""
    if max_error <= 0.0:
        raise NonPositiveNormalizer(
            f"metric normalizer must be positive, got {max_error}")
    cost = float(cost)
    if math.isnan(cost) or cost < 0.0:
        raise ConfigError(f"metric cost must be >= 0, got {cost}")
    value = 1.0 - math.log1p(cost) / math.log1p(max_error)
    return min(1.0, max(0.0, value))


def summarize_metrics(metrics) -> tuple[float, float]:
    """Mean and 1.96-sample-stdev half width of a metric list."""
    metrics = [float(m) for m in metrics]
    mean = float(np.mean(metrics))
    half = (1.96 * float(np.std(metrics, ddof=1))
            if len(metrics) > 1 else 0.0)
    return mean, half


def _child_seed(seed: int, iteration: int) -> int:
    state = np.random.SeedSequence([int(seed), int(iteration)]).generate_state(1, np.uint64)
    return int(state[0])


def _summarize_strokes(strokes: StrokeSet) -> str:
    starts = np.asarray(strokes.starts, dtype=float)
    vecs = np.asarray(strokes.vecs, dtype=float)
    if starts.shape[0] == 0:
        return "no strokes were drawn"
    lines = []
    for i in range(starts.shape[0]):
        x0, y0 = starts[i]
        x1, y1 = starts[i] + vecs[i]
        lines.append(f"stroke {i + 1}: ({x0:.1f}, {y0:.1f}) -> "
                     f"({x1:.1f}, {y1:.1f}) px")
    return "\n".join(lines)


def _summarize_push(trace: PushTrace) -> str:
    lines = []
    for frame in trace.final_scene.frames:
        if frame.is_block():
            lines.append(f"{frame.name}: ({frame.x_pos:.3f}, {frame.y_pos:.3f}) m")
    pusher = np.asarray(trace.pusher, dtype=float)
    if pusher.shape[0]:
        lines.append(f"pusher end: ({pusher[-1, 0]:.3f}, {pusher[-1, 1]:.3f}) m")
    return "\n".join(lines) if lines else "no movable blocks in the scene"


def _summarize(rollout) -> str:
    if isinstance(rollout, StrokeSet):
        return _summarize_strokes(rollout)
    return _summarize_push(rollout)


class _Evaluator:
    """Scores one parameter vector end to end and remembers the best."""

    def __init__(self, template: PlanTemplate, task: TaskSpec, scene, cfg: RunConfig):
        self.template = template
        self.task = task
        self.scene = scene
        self.cfg = cfg
        self.opts = cfg.solver_options()
        self.best_cost = math.inf
        self.best_alpha = None
        self.best_trajectory = None
        self.best_rollout = None

    def evaluate(self, alpha) -> tuple[float, object, object]:
        try:
            actions = instantiate(self.template, list(alpha), self.scene)
            spec = actions_to_nlp(actions, self.task.domain, self.scene,
                                  steps_per_phase=self.cfg.steps_per_phase,
                                  dt=self.cfg.dt)
            sol = solve(spec, default_init(spec), opts=self.opts)
            cost, rollout = rollout_and_cost(self.task.name, sol.x, actions, self.scene)
            if not sol.converged:
                cost = cost + 10.0 * max(sol.max_h_violation, sol.max_g_violation)
            return float(cost), sol.x, rollout
        except MopsError:
            return math.inf, None, None

    def absorb(self, alpha, result) -> None:
        cost, trajectory, rollout = result
        if cost < self.best_cost:
            self.best_cost = cost
            self.best_alpha = [float(a) for a in alpha]
            self.best_trajectory = trajectory
            self.best_rollout = rollout


def _optimizer_kwargs(cfg: RunConfig) -> dict:
    if cfg.optimizer == "cmaes" and cfg.popsize is not None:
        return {"popsize": cfg.popsize}
    if cfg.optimizer == "hillclimb":
        return {"p_accept": cfg.p_accept}
    return {}


def _optimize_iteration(template: PlanTemplate, task: TaskSpec, scene,
                        cfg: RunConfig, seed: int, iteration: int,
                        workers: int) -> tuple[_Evaluator, list, list, int]:
    """Budgeted parameter search for one proposed template."""
    evaluator = _Evaluator(template, task, scene, cfg)
    dim = template.param_dim()
    if dim == 0:
        result = evaluator.evaluate([])
        evaluator.absorb([], result)
        best = evaluator.best_cost
        return evaluator, [result[0]], [(1, best)], 1

    problem = BBOProblem(dim=dim, x0=tuple(template.initial_vector()),
                         sigma0=cfg.sigma0, budget=cfg.budget,
                         seed=_child_seed(seed, iteration))
    state = make_optimizer(cfg.optimizer, problem, **_optimizer_kwargs(cfg))
    costs: list[float] = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while state.remaining > 0:
            batch = state.ask()
            if pool is not None:
                results = list(pool.map(evaluator.evaluate, batch))
            else:
                results = [evaluator.evaluate(c) for c in batch]
            state.tell([r[0] for r in results])
            for cand, result in zip(batch, results):
                evaluator.absorb(cand, result)
                costs.append(result[0])
            if evaluator.best_cost <= cfg.target_cost:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    return evaluator, costs, list(state.history), state.evaluations_used


def run_task(cfg: RunConfig, seed: int, workers: int = 1) -> RunRecord:
    """One full seeded run of the three-level loop."""
    cfg = cfg.resolved()
    task = get_task(cfg.task)
    scene = build_scene(cfg.task)
    backend = make_backend(cfg.proposer, cfg.task)
    max_error = (cfg.max_error if cfg.max_error is not None
                 else null_plan_cost(cfg.task, scene))
    record = RunRecord(
        config=asdict(cfg),
        seed=int(seed),
        scene=scene.to_dict(),
        max_error=max_error,
        cost_offset=cfg.cost_offset,
    )

    history_pairs: list = []
    t0 = time.perf_counter()
    for iteration in range(cfg.max_feedback + 1):
        it_start = time.perf_counter()
        messages = build_prompt(task, scene, history_pairs)
        template, template_text = propose(backend, messages)
        evaluator, costs, history, used = _optimize_iteration(
            template, task, scene, cfg, seed, iteration, workers)
        summary = (_summarize(evaluator.best_rollout)
                   if evaluator.best_rollout is not None
                   else "no candidate produced a valid trajectory")
        rec = IterationRecord(
            index=iteration,
            messages=messages,
            template_text=template_text,
            costs=costs,
            history=history,
            best_cost=evaluator.best_cost,
            best_alpha=evaluator.best_alpha or [],
            best_trajectory=(evaluator.best_trajectory.to_dict()
                             if evaluator.best_trajectory is not None else None),
            state_summary=summary,
            evaluations=used,
            elapsed_s=time.perf_counter() - it_start,
        )
        record.iterations.append(rec)
        if evaluator.best_cost <= cfg.target_cost:
            break
        if iteration < cfg.max_feedback:
            try:
                feedback = build_feedback(rec, cfg.target_cost)
            except EmptyRecord:
                feedback = ("Every candidate failed to produce a valid "
                            "trajectory. Simplify the plan and try again.")
            history_pairs.append((template_text, feedback))

    record.final_cost = min((rec.best_cost for rec in record.iterations),
                            default=math.inf)
    shifted_cost = max(0.0, record.final_cost - cfg.cost_offset)
    shifted_max = max_error - cfg.cost_offset
    if math.isfinite(record.final_cost):
        record.metric = normalized_performance(shifted_cost, shifted_max)
    else:
        record.metric = 0.0
    record.timings = {
        "total_s": time.perf_counter() - t0,
        "per_iteration_s": [rec.elapsed_s for rec in record.iterations],
    }
    return record


# ---------------------------------------------------------------------------
# Persistence and rendering


def rollout_from_record(record: RunRecord):
    """Re-derive the best iteration's rollout from its stored pieces."""
    rec = record.best_iteration()
    if rec.best_trajectory is None:
        return None
    template = parse(rec.template_text)
    scene = _scene_from_record(record)
    actions = instantiate(template, rec.best_alpha, scene)
    trajectory = Trajectory.from_dict(rec.best_trajectory)
    task = get_task(record.config["task"])
    _, rollout = rollout_and_cost(task.name, trajectory, actions, scene)
    return rollout


def _scene_from_record(record: RunRecord):
    from .scene import SceneState

    return SceneState.from_dict(record.scene)


def render_record(record: RunRecord, out_dir) -> list[Path]:
    """All SVG artifacts for one run."""
    out_dir = Path(out_dir)
    task = record.config["task"]
    written = []
    for rec in record.iterations:
        written.append(render_curve(
            rec.history, out_dir / f"curve_iter{rec.index}.svg",
            title=f"{task} seed {record.seed} iteration {rec.index}"))
    finite_bests = [(rec.index, rec.best_cost) for rec in record.iterations]
    written.append(render_curve(
        finite_bests, out_dir / "feedback_curve.svg",
        title=f"{task} seed {record.seed}: best cost per feedback iteration"))
    rollout = rollout_from_record(record)
    if rollout is not None:
        if isinstance(rollout, StrokeSet):
            written.append(render_strokes(
                rollout, out_dir / "rollout.svg",
                title=f"{task} seed {record.seed} best strokes"))
        else:
            written.append(render_push(
                rollout, _scene_from_record(record), out_dir / "rollout.svg",
                title=f"{task} seed {record.seed} final layout"))
    return written


def save_run(record: RunRecord, out_dir) -> Path:
    """record.json + line-delimited evaluation log + SVGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "record.json").write_text(
        json.dumps(record.to_dict(), indent=2) + "\n")
    with open(out_dir / "evals.jsonl", "w") as fh:
        for rec in record.iterations:
            for j, cost in enumerate(rec.costs):
                fh.write(json.dumps({
                    "iteration": rec.index,
                    "evaluation": j,
                    "cost": cost if math.isfinite(cost) else None,
                }) + "\n")
    render_record(record, out_dir)
    return out_dir


def load_run(run_dir) -> RunRecord:
    text = (Path(run_dir) / "record.json").read_text()
    return RunRecord.from_dict(json.loads(text))


def run_suite(configs, out_dir=None, workers: int = 1) -> dict:
    """Run every (config, seed) cell and aggregate the metric.

    Returns a summary dict with one row per config: per-seed metrics and
    final costs, their mean, and a 1.96-sample-stdev half width.
    """
    configs = [cfg.resolved() for cfg in configs]
    if not configs:
        raise ConfigError("suite needs at least one run config")
    out_dir = Path(out_dir) if out_dir is not None else None
    rows = []
    for idx, cfg in enumerate(configs):
        if workers > 1 and len(cfg.seeds) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(lambda s: run_task(cfg, s), cfg.seeds))
        else:
            records = [run_task(cfg, s) for s in cfg.seeds]
        metrics = [r.metric for r in records]
        finals = [r.final_cost for r in records]
        mean, half = summarize_metrics(metrics)
        row = {
            "task": cfg.task,
            "optimizer": cfg.optimizer,
            "proposer": cfg.proposer,
            "seeds": list(cfg.seeds),
            "metrics": metrics,
            "final_costs": [c if math.isfinite(c) else None for c in finals],
            "mean_metric": mean,
            "interval_half_width": half,
        }
        rows.append(row)
        if out_dir is not None:
            for record in records:
                name = f"run{idx:02d}-{cfg.task}-{cfg.optimizer}-seed{record.seed}"
                save_run(record, out_dir / name)
    summary = {"version": __version__, "rows": rows}
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
