"""Scene description: named frames with pose, size and color.

The frame layout mirrors the structure the planner prompts expose, so a
scene serializes to JSON with exactly these field names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .errors import UnknownFrame

# Frames whose name contains one of these tokens never move in the pushing
# simulator; "target" frames are goal markers with no collision body.
IMMOVABLE_TOKENS = ("wall", "table")
MARKER_TOKENS = ("target",)


@dataclass(frozen=True)
class Frame:
    name: str
    x_pos: float = 0.0
    y_pos: float = 0.0
    z_pos: float = 0.0
    x_rot: float = 0.0
    y_rot: float = 0.0
    z_rot: float = 0.0
    size: tuple[float, float, float] = (0.0, 0.0, 0.0)
    color: tuple[int, int, int] = (128, 128, 128)

    def __post_init__(self):
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        object.__setattr__(self, "color", tuple(int(v) for v in self.color))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x_pos, self.y_pos)

    def numeric_attr(self, attr: str) -> float | None:
        """Scalar pose attribute by name, or None if not one of the six."""
        if attr in ("x_pos", "y_pos", "z_pos", "x_rot", "y_rot", "z_rot"):
            return float(getattr(self, attr))
        return None

    def moved_to(self, x: float, y: float) -> "Frame":
        return Frame(self.name, float(x), float(y), self.z_pos,
                     self.x_rot, self.y_rot, self.z_rot, self.size, self.color)

    def is_immovable(self) -> bool:
        return any(tok in self.name for tok in IMMOVABLE_TOKENS)

    def is_marker(self) -> bool:
        return any(tok in self.name for tok in MARKER_TOKENS)

    def is_block(self) -> bool:
        return not self.is_immovable() and not self.is_marker()


@dataclass(frozen=True)
class SceneState:
    frames: tuple[Frame, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        names = [f.name for f in self.frames]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate frame names in scene: {names}")

    def get(self, name: str) -> Frame:
        for f in self.frames:
            if f.name == name:
                return f
        raise UnknownFrame(name)

    def has(self, name: str) -> bool:
        return any(f.name == name for f in self.frames)

    def blocks(self) -> list[Frame]:
        """Movable collision bodies, in scene order."""
        return [f for f in self.frames if f.is_block()]

    def replace(self, frame: Frame) -> "SceneState":
        updated = tuple(frame if f.name == frame.name else f for f in self.frames)
        return SceneState(updated)

    def to_dict(self) -> dict:
        return {"frames": [
            {
                "name": f.name,
                "x_pos": f.x_pos, "y_pos": f.y_pos, "z_pos": f.z_pos,
                "x_rot": f.x_rot, "y_rot": f.y_rot, "z_rot": f.z_rot,
                "size": list(f.size), "color": list(f.color),
            }
            for f in self.frames
        ]}

    @staticmethod
    def from_dict(d: dict) -> "SceneState":
        return SceneState(tuple(
            Frame(
                name=fd["name"],
                x_pos=float(fd.get("x_pos", 0.0)),
                y_pos=float(fd.get("y_pos", 0.0)),
                z_pos=float(fd.get("z_pos", 0.0)),
                x_rot=float(fd.get("x_rot", 0.0)),
                y_rot=float(fd.get("y_rot", 0.0)),
                z_rot=float(fd.get("z_rot", 0.0)),
                size=tuple(fd.get("size", (0.0, 0.0, 0.0))),
                color=tuple(fd.get("color", (128, 128, 128))),
            )
            for fd in d["frames"]
        ))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def from_json(text: str) -> "SceneState":
        return SceneState.from_dict(json.loads(text))
