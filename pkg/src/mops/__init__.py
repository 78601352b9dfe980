"""Meta-optimized plan synthesis.

Three nested optimizers: a proposer writes plan templates in a small
action language, a derivative-free optimizer tunes their continuous
parameters, and an augmented Lagrangian solver turns each candidate
into a smooth trajectory that is rolled out and scored.
"""

from .bbo import BBOProblem, BBOResult, CmaEs, HillClimb, RandomSampler, make_optimizer, minimize
from .draw import (
    BoardGeometry,
    CameraModel,
    DrawCostConfig,
    StrokeSet,
    cost_hash,
    cost_pentagon,
    cost_star,
    extract_strokes,
    hash_terms,
)
from .dsl import (
    ActionSequence,
    PlanAction,
    PlanTemplate,
    evaluate,
    format_template,
    instantiate,
    parse,
)
from ._version import __version__
from .errors import MopsError
from .nlp import (
    ConstraintInstance,
    NLPSpec,
    actions_to_nlp,
    assemble,
    constraints_eval,
    objective_value_grad,
)
from .proposer import (
    FeedbackReport,
    LlmBackend,
    ScriptedBackend,
    build_feedback,
    build_prompt,
    make_backend,
    propose,
)
from .push import PushTrace, TABLE_BOUNDS, cost_circle, cost_line, cost_push_avoid, simulate
from .runner import (
    IterationRecord,
    RunConfig,
    RunRecord,
    load_run,
    normalized_performance,
    render_record,
    run_suite,
    run_task,
    save_run,
    summarize_metrics,
)
from .scene import Frame, SceneState
from .solver import Solution, SolverOptions, default_init, solve
from .tasks import TASKS, TaskSpec, build_scene, get_task, null_plan_cost, rollout_and_cost
from .trajectory import Trajectory

__all__ = [
    "__version__",
    "BBOProblem", "BBOResult", "CmaEs", "HillClimb", "RandomSampler",
    "make_optimizer", "minimize",
    "BoardGeometry", "CameraModel", "DrawCostConfig", "StrokeSet",
    "cost_hash", "cost_pentagon", "cost_star", "extract_strokes", "hash_terms",
    "ActionSequence", "PlanAction", "PlanTemplate", "evaluate",
    "format_template", "instantiate", "parse",
    "MopsError",
    "ConstraintInstance", "NLPSpec", "actions_to_nlp", "assemble",
    "constraints_eval", "objective_value_grad",
    "FeedbackReport", "LlmBackend", "ScriptedBackend", "build_feedback",
    "build_prompt", "make_backend", "propose",
    "PushTrace", "TABLE_BOUNDS", "cost_circle", "cost_line",
    "cost_push_avoid", "simulate",
    "IterationRecord", "RunConfig", "RunRecord", "load_run",
    "normalized_performance", "render_record", "run_suite", "run_task",
    "save_run", "summarize_metrics",
    "Frame", "SceneState",
    "Solution", "SolverOptions", "default_init", "solve",
    "TASKS", "TaskSpec", "build_scene", "get_task", "null_plan_cost",
    "rollout_and_cost",
    "Trajectory",
]
