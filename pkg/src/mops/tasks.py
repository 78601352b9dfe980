"""Task registry: scenes, goals and rollout scoring for each task.

Six tasks across two domains. Drawing tasks score projected strokes;
pushing tasks roll the trajectory through the push simulator and score
final block layouts (or the whole trace for the obstacle task).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .draw import BoardGeometry, CameraModel, StrokeSet, cost_hash, cost_pentagon, cost_star, extract_strokes
from .dsl import ActionSequence
from .errors import ConfigError
from .push import PushTrace, cost_circle, cost_line, cost_push_avoid, simulate
from .scene import Frame, SceneState
from .trajectory import Trajectory


@dataclass(frozen=True)
class TaskSpec:
    name: str
    domain: str                 # "draw" | "push"
    goal: str
    target_cost: float
    cost_offset: float = 0.0
    expected_strokes: int | None = None


TASKS: dict[str, TaskSpec] = {
    "pentagon": TaskSpec(
        name="pentagon", domain="draw",
        goal="Draw a pentagon on the whiteboard.",
        target_cost=1.0, expected_strokes=5),
    "star": TaskSpec(
        name="star", domain="draw",
        goal="Draw a five-pointed star on the whiteboard.",
        target_cost=1.0, expected_strokes=10),
    "hash": TaskSpec(
        name="hash", domain="draw",
        goal="Draw a hash symbol (#) on the whiteboard.",
        target_cost=1.0, expected_strokes=4),
    "circle": TaskSpec(
        name="circle", domain="push",
        goal="Push the blocks so that they form a circle.",
        target_cost=0.05),
    "line": TaskSpec(
        name="line", domain="push",
        goal="Push the blocks so that they form a straight line.",
        target_cost=0.05),
    "avoid": TaskSpec(
        name="avoid", domain="push",
        goal="Push the big red block to the target pose while keeping "
             "clear of the wall.",
        target_cost=0.5, cost_offset=-2.0),
}


def get_task(name) -> TaskSpec:
    if isinstance(name, TaskSpec):
        return name
    try:
        return TASKS[name]
    except KeyError:
        raise ConfigError(f"unknown task {name!r}; choose from {sorted(TASKS)}")


def build_scene(task) -> SceneState:
    """Deterministic initial scene for each task."""
    spec = get_task(task)
    task = spec.name
    if spec.domain == "draw":
        return SceneState(frames=())
    if task == "circle":
        cube = (0.06, 0.06, 0.06)
        return SceneState((
            Frame("block_red", 0.30, 0.05, 0.03, size=cube, color=(220, 60, 60)),
            Frame("block_green", 0.18, 0.27, 0.03, size=cube, color=(60, 180, 75)),
            Frame("block_blue", -0.10, 0.32, 0.03, size=cube, color=(65, 105, 225)),
            Frame("block_yellow", -0.31, 0.08, 0.03, size=cube, color=(230, 200, 50)),
            Frame("block_purple", -0.22, -0.24, 0.03, size=cube, color=(150, 80, 190)),
            Frame("block_orange", 0.10, -0.30, 0.03, size=cube, color=(240, 140, 40)),
        ))
    if task == "line":
        cube = (0.06, 0.06, 0.06)
        return SceneState((
            Frame("block_red", -0.30, 0.12, 0.03, size=cube, color=(220, 60, 60)),
            Frame("block_green", -0.10, -0.18, 0.03, size=cube, color=(60, 180, 75)),
            Frame("block_blue", 0.10, 0.20, 0.03, size=cube, color=(65, 105, 225)),
            Frame("block_yellow", 0.30, -0.08, 0.03, size=cube, color=(230, 200, 50)),
        ))
    if task == "avoid":
        return SceneState((
            Frame("big_red_block", -0.20, 0.25, 0.05,
                  size=(0.10, 0.20, 0.10), color=(220, 60, 60)),
            Frame("target_pose", 0.35, 0.25, 0.05,
                  size=(0.10, 0.20, 0.10), color=(160, 160, 160)),
            Frame("wall", 0.10, 0.30, 0.05,
                  size=(0.04, 0.36, 0.10), color=(90, 90, 90)),
        ))
    raise ConfigError(f"no scene builder for task {task!r}")


DRAW_COSTS = {
    "pentagon": cost_pentagon,
    "star": cost_star,
    "hash": cost_hash,
}


def rollout_and_cost(task, x: Trajectory, actions: ActionSequence,
                     scene: SceneState,
                     geom: BoardGeometry | None = None,
                     camera: CameraModel | None = None):
    """Roll a solved trajectory out and score it.

    Returns (cost, rollout); rollout is a StrokeSet for drawing tasks
    and a PushTrace for pushing tasks.
    """
    spec = get_task(task)
    task = spec.name
    if spec.domain == "draw":
        strokes = extract_strokes(x, actions, geom, camera)
        return DRAW_COSTS[task](strokes), strokes
    trace = simulate(x, actions, scene)
    if task == "avoid":
        return cost_push_avoid(trace, scene), trace
    points = trace.final_positions()
    if task == "circle":
        return cost_circle(points), trace
    return cost_line(points), trace


def null_plan_cost(task, scene: SceneState | None = None) -> float:
    """Extrinsic cost of doing nothing; the metric's default normalizer.

    Drawing: no strokes at all (pure structural cost). Pushing: blocks
    left at their initial poses, pusher parked in the table corner.
    """
    spec = get_task(task)
    task = spec.name
    scene = scene if scene is not None else build_scene(task)
    if spec.domain == "draw":
        return DRAW_COSTS[task](StrokeSet(np.zeros((0, 2)), np.zeros((0, 2))))
    if task == "avoid":
        park = np.tile(np.array([-0.45, -0.45]), (3, 1))
        blocks = {f.name: np.tile(np.array(f.xy), (3, 1)) for f in scene.blocks()}
        trace = PushTrace(pusher=park, blocks=blocks, final_scene=scene, dt=0.1)
        return cost_push_avoid(trace, scene)
    points = np.array([f.xy for f in scene.blocks()])
    return cost_circle(points) if task == "circle" else cost_line(points)
