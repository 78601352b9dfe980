"""Frames, scene containers and trajectory validation."""
import numpy as np
import pytest

from mops.errors import BadNLP, UnknownFrame
from mops.scene import Frame, SceneState
from mops.tasks import build_scene
from mops.trajectory import Trajectory, uniform_phases


def test_frame_coerces_size_and_color():
    frame = Frame(name="cube", size=(1, 2, 3), color=(10.7, 20.2, 30.9))
    assert frame.size == (1.0, 2.0, 3.0)
    assert all(isinstance(v, float) for v in frame.size)
    assert frame.color == (10, 20, 30)
    with pytest.raises(ValueError):
        Frame(name="cube", color=("red", 0, 0))


def test_frame_accessors():
    frame = Frame(name="cube", x_pos=0.1, y_pos=-0.2, z_rot=0.5)
    assert frame.xy == (0.1, -0.2)
    assert frame.numeric_attr("z_rot") == 0.5
    assert frame.numeric_attr("size") is None
    moved = frame.moved_to(1.0, 2.0)
    assert moved.xy == (1.0, 2.0)
    assert moved.z_rot == 0.5
    assert moved.name == "cube"


def test_frame_role_tokens():
    assert Frame(name="wall").is_immovable()
    assert Frame(name="side_table_leg").is_immovable()
    assert Frame(name="target_pose").is_marker()
    block = Frame(name="big_red_block")
    assert block.is_block()
    assert not block.is_immovable() and not block.is_marker()


def test_scene_lookup_and_blocks():
    scene = build_scene("avoid")
    assert scene.has("wall")
    assert not scene.has("ceiling")
    with pytest.raises(UnknownFrame):
        scene.get("ceiling")
    assert [f.name for f in scene.blocks()] == ["big_red_block"]
    with pytest.raises(ValueError):
        SceneState(frames=(Frame(name="a"), Frame(name="a")))


def test_scene_replace_is_by_name_and_pure():
    scene = build_scene("avoid")
    moved = scene.replace(scene.get("big_red_block").moved_to(0.0, 0.0))
    assert moved.get("big_red_block").xy == (0.0, 0.0)
    assert scene.get("big_red_block").xy == (-0.20, 0.25)
    assert [f.name for f in moved.frames] == [f.name for f in scene.frames]


def test_scene_serialization_round_trip():
    scene = build_scene("circle")
    assert SceneState.from_dict(scene.to_dict()) == scene
    assert SceneState.from_json(scene.to_json()) == scene
    partial = SceneState.from_dict({"frames": [{"name": "solo"}]})
    assert partial.get("solo").xy == (0.0, 0.0)
    assert partial.get("solo").color == (128, 128, 128)


def test_trajectory_validation():
    good = np.zeros((4, 2))
    Trajectory(good, phase_bounds=((0, 4),))
    with pytest.raises(BadNLP):
        Trajectory(np.zeros(4), phase_bounds=((0, 4),))
    with pytest.raises(BadNLP):
        Trajectory(np.zeros((2, 2)), phase_bounds=((0, 2),))
    with pytest.raises(BadNLP):
        bad = good.copy()
        bad[1, 1] = np.inf
        Trajectory(bad, phase_bounds=((0, 4),))
    with pytest.raises(BadNLP):
        Trajectory(good, phase_bounds=((0, 4),), dt=0.0)
    with pytest.raises(BadNLP):
        Trajectory(good, phase_bounds=((0, 3),))
    with pytest.raises(BadNLP):
        Trajectory(good, phase_bounds=((0, 2), (3, 4)))


def test_trajectory_properties_and_round_trip():
    data = np.arange(12.0).reshape(6, 2)
    x = Trajectory(data, phase_bounds=((0, 3), (3, 6)), dt=0.25)
    assert x.horizon == 6
    assert x.dim == 2
    assert x.num_phases == 2
    clone = Trajectory.from_dict(x.to_dict())
    assert np.array_equal(clone.data, x.data)
    assert clone.phase_bounds == x.phase_bounds
    assert clone.dt == x.dt


def test_uniform_phases_tile_the_horizon():
    assert uniform_phases(1, 5) == ((0, 5),)
    assert uniform_phases(3, 4) == ((0, 4), (4, 8), (8, 12))
