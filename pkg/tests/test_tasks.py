"""Task registry, scene construction and rollout scoring."""
import numpy as np
import pytest

from mops.draw import StrokeSet
from mops.dsl import PlanAction
from mops.errors import ConfigError
from mops.nlp import actions_to_nlp
from mops.push import PushTrace, cost_line
from mops.solver import solve
from mops.tasks import (
    TASKS,
    TaskSpec,
    build_scene,
    get_task,
    null_plan_cost,
    rollout_and_cost,
)
from mops.trajectory import Trajectory


def test_registry_contents():
    assert sorted(TASKS) == ["avoid", "circle", "hash", "line",
                             "pentagon", "star"]
    pentagon = get_task("pentagon")
    assert pentagon.domain == "draw"
    assert pentagon.goal == "Draw a pentagon on the whiteboard."
    assert pentagon.target_cost == 1.0
    assert pentagon.cost_offset == 0.0
    assert pentagon.expected_strokes == 5
    assert get_task("star").expected_strokes == 10
    assert get_task("hash").expected_strokes == 4
    avoid = get_task("avoid")
    assert avoid.domain == "push"
    assert avoid.target_cost == 0.5
    assert avoid.cost_offset == -2.0
    assert get_task("circle").target_cost == 0.05


def test_get_task_passes_specs_through_and_rejects_unknowns():
    custom = TaskSpec(name="pentagon", domain="draw", goal="g",
                      target_cost=2.0)
    assert get_task(custom) is custom
    with pytest.raises(ConfigError):
        get_task("juggling")


def test_drawing_scenes_are_empty():
    for task in ("pentagon", "star", "hash"):
        assert build_scene(task).frames == ()


def test_pushing_scene_layouts():
    circle = build_scene("circle")
    assert len(circle.blocks()) == 6
    assert circle.get("block_red").xy == (0.30, 0.05)
    assert all(f.size == (0.06, 0.06, 0.06) for f in circle.blocks())
    line = build_scene("line")
    assert [f.xy for f in line.blocks()] == [
        (-0.30, 0.12), (-0.10, -0.18), (0.10, 0.20), (0.30, -0.08)]
    avoid = build_scene("avoid")
    assert avoid.get("big_red_block").size == (0.10, 0.20, 0.10)
    assert avoid.get("wall").xy == (0.10, 0.30)
    assert avoid.get("target_pose").is_marker()


def test_rollout_dispatches_on_the_domain():
    actions = (PlanAction("draw_line", (0.1, 0.1, 0.4, 0.3)),)
    nlp = actions_to_nlp(actions, "draw", build_scene("hash"),
                         steps_per_phase=8)
    sol = solve(nlp)
    cost, rollout = rollout_and_cost("hash", sol.x, actions,
                                     build_scene("hash"))
    assert isinstance(rollout, StrokeSet)
    assert len(rollout) == 1
    assert cost >= 3000.0              # three strokes short of a hash

    scene = build_scene("line")
    parked = Trajectory(np.tile([-0.45, -0.45], (3, 1)),
                        phase_bounds=((0, 3),))
    push = (PlanAction("push_motion", (-0.45, -0.45, -0.45, -0.45)),)
    cost, trace = rollout_and_cost("line", parked, push, scene)
    assert isinstance(trace, PushTrace)
    assert cost == cost_line([f.xy for f in scene.blocks()])


def test_null_plan_costs():
    assert null_plan_cost("pentagon") == 5000.0
    assert null_plan_cost("star") == 10000.0
    assert null_plan_cost("hash") == 4000.0
    for task in ("circle", "line", "avoid"):
        value = null_plan_cost(task)
        assert np.isfinite(value)
        assert value > 0.0
    # doing nothing scores exactly like a parked-pusher rollout
    scene = build_scene("line")
    parked = Trajectory(np.tile([-0.45, -0.45], (3, 1)), phase_bounds=((0, 3),))
    push = (PlanAction("push_motion", (-0.45, -0.45, -0.45, -0.45)),)
    cost, _ = rollout_and_cost("line", parked, push, scene)
    assert abs(null_plan_cost("line") - cost) < 1e-12
