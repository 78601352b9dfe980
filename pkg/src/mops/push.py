"""Planar pushing domain: deterministic quasi-static point-push simulator
plus the extrinsic costs over final block layouts.

The pusher is a point following the planned trajectory in the table
plane. During a push phase its swept path displaces any block it
penetrates by the minimal translation that resolves the contact
(sticking contact, no rotation). Between phases the pusher is treated as
lifted off the table, so transits never disturb the scene. Walls and the
table boundary are immovable; blocks pushed into them clamp there, and
block-block contact propagates the displacement downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsl import ActionSequence
from .errors import MissingFrame, PhaseMismatch
from .scene import Frame, SceneState
from .trajectory import Trajectory

# Table workspace in meters, x then y.
TABLE_BOUNDS = ((-0.5, 0.5), (-0.5, 0.5))

# Contact resolution tolerances.
PENETRATION_TOL = 1e-6
_MAX_SUBSTEP = 0.005
_MAX_CHAIN_DEPTH = 8


@dataclass(frozen=True)
class PushTrace:
    """Per-timestep pusher and block positions plus the final scene."""

    pusher: np.ndarray                  # (T, 2)
    blocks: dict                        # name -> (T, 2) array
    final_scene: SceneState
    dt: float

    def final_positions(self, names=None) -> np.ndarray:
        names = sorted(self.blocks) if names is None else list(names)
        return np.array([self.blocks[n][-1] for n in names], dtype=float)


class _Body:
    """Oriented rectangle with fixed rotation; only the center moves."""

    __slots__ = ("name", "cx", "cy", "hx", "hy", "cos", "sin", "radius", "movable")

    def __init__(self, frame: Frame, movable: bool):
        self.name = frame.name
        self.cx = float(frame.x_pos)
        self.cy = float(frame.y_pos)
        self.hx = max(float(frame.size[0]) * 0.5, 1e-6)
        self.hy = max(float(frame.size[1]) * 0.5, 1e-6)
        self.cos = math.cos(float(frame.z_rot))
        self.sin = math.sin(float(frame.z_rot))
        self.radius = math.hypot(self.hx, self.hy)
        self.movable = movable

    def local(self, px: float, py: float) -> tuple[float, float]:
        dx = px - self.cx
        dy = py - self.cy
        return (self.cos * dx + self.sin * dy, -self.sin * dx + self.cos * dy)

    def contains(self, px: float, py: float) -> bool:
        qx, qy = self.local(px, py)
        return abs(qx) < self.hx and abs(qy) < self.hy

    def axes(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.cos, self.sin), (-self.sin, self.cos))

    def corners(self) -> list[tuple[float, float]]:
        out = []
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                lx = sx * self.hx
                ly = sy * self.hy
                out.append((self.cx + self.cos * lx - self.sin * ly,
                            self.cy + self.sin * lx + self.cos * ly))
        return out

    def clamp_to_bounds(self) -> None:
        # conservative axis-aligned extent of the rotated rectangle
        ext_x = abs(self.cos) * self.hx + abs(self.sin) * self.hy
        ext_y = abs(self.sin) * self.hx + abs(self.cos) * self.hy
        (lo_x, hi_x), (lo_y, hi_y) = TABLE_BOUNDS
        self.cx = min(max(self.cx, lo_x + ext_x), hi_x - ext_x)
        self.cy = min(max(self.cy, lo_y + ext_y), hi_y - ext_y)


def _point_exit_vectors(body: _Body, px: float, py: float):
    """Candidate world translations of `body` that free the point past a
    face, sorted by penetration depth (shallowest first). Each move
    overshoots by PENETRATION_TOL so the point lands strictly outside."""
    qx, qy = body.local(px, py)
    # moving the body along -axis by depth puts the point on the +face
    cands = [
        (body.hx - qx, (body.cos, body.sin), -1.0),    # +x face
        (qx + body.hx, (body.cos, body.sin), 1.0),     # -x face
        (body.hy - qy, (-body.sin, body.cos), -1.0),   # +y face
        (qy + body.hy, (-body.sin, body.cos), 1.0),    # -y face
    ]
    cands.sort(key=lambda c: c[0])
    return [(depth, (sign * ux * (depth + PENETRATION_TOL),
                     sign * uy * (depth + PENETRATION_TOL)))
            for depth, (ux, uy), sign in cands]


def _rect_mtv(a: _Body, b: _Body):
    """Minimal translation applied to `b` separating it from `a`, or None."""
    best_overlap = math.inf
    best_axis = None
    ac = a.corners()
    bc = b.corners()
    for ux, uy in (*a.axes(), *b.axes()):
        a_proj = [c[0] * ux + c[1] * uy for c in ac]
        b_proj = [c[0] * ux + c[1] * uy for c in bc]
        a_lo, a_hi = min(a_proj), max(a_proj)
        b_lo, b_hi = min(b_proj), max(b_proj)
        overlap = min(a_hi, b_hi) - max(a_lo, b_lo)
        if overlap <= 0.0:
            return None
        if overlap < best_overlap:
            best_overlap = overlap
            center_delta = (b.cx - a.cx) * ux + (b.cy - a.cy) * uy
            sign = 1.0 if center_delta >= 0.0 else -1.0
            best_axis = (sign * ux, sign * uy)
    return (best_overlap * best_axis[0], best_overlap * best_axis[1])


class _World:
    def __init__(self, scene: SceneState):
        self.bodies: list[_Body] = []
        for f in scene.frames:
            if f.is_marker():
                continue
            if any(s <= 0.0 for s in f.size[:2]):
                continue
            self.bodies.append(_Body(f, movable=f.is_block()))
        self.movable = [b for b in self.bodies if b.movable]
        self.obstacles = [b for b in self.bodies if not b.movable]

    def positions(self) -> dict:
        return {b.name: (b.cx, b.cy) for b in self.movable}

    def restore(self, snapshot: dict) -> None:
        for b in self.movable:
            b.cx, b.cy = snapshot[b.name]

    def _settle(self, body: _Body, depth: int) -> None:
        """Clamp `body` against obstacles and bounds, then propagate any
        overlap into downstream movable blocks."""
        for obs in self.obstacles:
            mtv = _rect_mtv(obs, body)
            if mtv is not None:
                body.cx += mtv[0]
                body.cy += mtv[1]
        body.clamp_to_bounds()
        if depth >= _MAX_CHAIN_DEPTH:
            return
        for other in self.movable:
            if other is body:
                continue
            mtv = _rect_mtv(body, other)
            if mtv is not None:
                other.cx += mtv[0]
                other.cy += mtv[1]
                self._settle(other, depth + 1)

    def resolve_point(self, px: float, py: float) -> None:
        """Push any block containing the pusher point out of it."""
        for body in self.movable:
            if not body.contains(px, py):
                continue
            snapshot = self.positions()
            resolved = False
            for _, delta in _point_exit_vectors(body, px, py):
                body.cx += delta[0]
                body.cy += delta[1]
                self._settle(body, 0)
                if not body.contains(px, py):
                    resolved = True
                    break
                self.restore(snapshot)
            if not resolved:
                # fully jammed; leave the clamped state as-is
                self._settle(body, 0)


def simulate(x: Trajectory, plan: ActionSequence, scene: SceneState) -> PushTrace:
    """Roll the pusher trajectory through the scene.

    One phase per push_motion action; contact only happens inside a
    phase (the pusher is lifted between phases). Deterministic: same
    inputs give bit-identical traces.
    """
    if len(plan) != x.num_phases:
        raise PhaseMismatch(
            f"plan has {len(plan)} actions but trajectory has {x.num_phases} phases")
    for action in plan:
        if action.name != "push_motion":
            raise PhaseMismatch(f"cannot simulate action {action.name!r}")
    if x.dim != 2:
        raise PhaseMismatch(f"pushing needs planar trajectories, got dim {x.dim}")

    world = _World(scene)
    T = x.horizon
    pusher = np.asarray(x.data, dtype=float).copy()
    block_rows = {b.name: np.empty((T, 2)) for b in world.movable}

    phase_start = set(s for s, _ in x.phase_bounds)

    for t in range(T):
        px, py = pusher[t]
        if t > 0 and t not in phase_start:
            # swept contact from the previous in-phase position
            x0, y0 = pusher[t - 1]
            dist = math.hypot(px - x0, py - y0)
            near = [b for b in world.movable
                    if math.hypot(b.cx - x0, b.cy - y0) <= b.radius + dist + _MAX_SUBSTEP]
            if near:
                n_sub = max(1, int(math.ceil(dist / _MAX_SUBSTEP)))
                for k in range(1, n_sub + 1):
                    frac = k / n_sub
                    world.resolve_point(x0 + frac * (px - x0), y0 + frac * (py - y0))
        else:
            # phase start (or t = 0): pusher placed down fresh
            world.resolve_point(px, py)
        for b in world.movable:
            block_rows[b.name][t, 0] = b.cx
            block_rows[b.name][t, 1] = b.cy

    final_scene = scene
    for b in world.movable:
        final_scene = final_scene.replace(final_scene.get(b.name).moved_to(b.cx, b.cy))
    return PushTrace(pusher=pusher, blocks=block_rows, final_scene=final_scene, dt=x.dt)


def interpenetration_depth(trace: PushTrace, scene: SceneState) -> float:
    """Deepest pusher-block or block-block overlap over the whole trace.

    Diagnostic used by tests; resolution keeps this at or below
    PENETRATION_TOL except in fully jammed configurations.
    """
    worst = 0.0
    names = sorted(trace.blocks)
    base = {n: scene.get(n) for n in names}
    T = trace.pusher.shape[0]
    for t in range(T):
        bodies = []
        for n in names:
            b = _Body(base[n], movable=True)
            b.cx, b.cy = trace.blocks[n][t]
            bodies.append(b)
        px, py = trace.pusher[t]
        for b in bodies:
            qx, qy = b.local(px, py)
            if abs(qx) < b.hx and abs(qy) < b.hy:
                worst = max(worst, min(b.hx - abs(qx), b.hy - abs(qy)))
        for i in range(len(bodies)):
            for j in range(i + 1, len(bodies)):
                mtv = _rect_mtv(bodies[i], bodies[j])
                if mtv is not None:
                    worst = max(worst, math.hypot(*mtv))
    return worst


# ---------------------------------------------------------------------------
# Extrinsic costs


def cost_circle(points) -> float:
    """Points should sit on a radius-0.2 circle around their centroid
    with neighbor spacing 0.2."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    c = p.mean(axis=0)
    radii = np.linalg.norm(p - c, axis=1)
    c_rad = float(np.sum((0.2 - radii) ** 2))
    diffs = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
    np.fill_diagonal(diffs, np.inf)
    nearest = diffs.min(axis=1)
    c_neigh = float(np.sum((0.2 - nearest) ** 2))
    return 1000.0 * c_rad + c_neigh


def cost_line(points) -> float:
    """Points should be collinear and evenly spaced.

    Least-squares fit of y = m x + b; when the x spread is degenerate
    (variance below 1e-9) the roles of x and y are swapped first.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    if float(np.var(p[:, 0])) < 1e-9:
        p = p[:, ::-1]
    xs = p[:, 0]
    ys = p[:, 1]
    var_x = float(np.var(xs))
    if var_x < 1e-30:
        # all points coincide; residuals are zero by convention
        m_hat, b_hat = 0.0, float(np.mean(ys))
    else:
        m_hat = float(np.cov(xs, ys, bias=True)[0, 1]) / var_x
        b_hat = float(np.mean(ys) - m_hat * np.mean(xs))
    resid = ys - (m_hat * xs + b_hat)
    c_fit = float(np.mean(resid ** 2))

    direction = np.array([1.0, m_hat])
    direction /= np.linalg.norm(direction)
    t = p @ direction
    t.sort()
    gaps = np.diff(t)
    c_space = float(np.var(gaps)) if gaps.size else 0.0
    return 1e4 * c_fit + 1e2 * c_space


def cost_push_avoid(trace: PushTrace, scene: SceneState) -> float:
    """Push the box to the target while avoiding the wall.

    Position terms are evaluated at the final trace frame; the gripper
    terms are averaged over the whole trace.
    """
    for name in ("big_red_block", "target_pose", "wall"):
        if not scene.has(name):
            raise MissingFrame(name)
    if "big_red_block" not in trace.blocks:
        raise MissingFrame("big_red_block")

    box_rows = trace.blocks["big_red_block"]
    p_box = box_rows[-1]
    p_init = box_rows[0]
    p_target = np.array(scene.get("target_pose").xy)
    p_wall = np.array(scene.get("wall").xy)

    c_pos = float(np.sum((4.0 * (p_box - p_target)) ** 2))
    c_wall = -math.log(max(float(np.linalg.norm(p_wall - p_box)), 1e-9))
    c_init = -math.log(max(float(np.linalg.norm(p_box - p_init)), 0.001))

    grip = trace.pusher
    c_endeff = float(np.mean(np.sum((4.0 * (box_rows - grip)) ** 2, axis=1)))
    c_endeff_wall = -float(np.mean(np.linalg.norm(p_wall[None, :] - grip, axis=1)))

    return (2.0 * c_pos + 0.01 * c_wall + 0.01 * c_init
            + 0.7 * c_endeff + 0.2 * c_endeff_wall)
