"""Trajectory NLP: smooth acceleration objective plus typed constraints,
and the lowering from evaluated plan actions to a constraint set.

State is a T x n trajectory. The objective is the summed squared second
difference (acceleration) over interior timesteps. Constraints come in a
small closed set of kinds; equalities stack into h(x) = 0, inequalities
into g(x) <= 0 (feasible when non-positive). Jacobians are analytic and
sparse by timestep, returned as dense arrays over the flattened state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import dsl
from .draw import BoardGeometry
from .errors import BadNLP, UnknownAction
from .push import TABLE_BOUNDS
from .scene import SceneState
from .trajectory import Trajectory, uniform_phases

EQ_KINDS = ("point_at", "start_at", "on_plane", "rest_at_phase_end")
INEQ_KINDS = ("in_box", "min_clearance")

DEFAULT_STEPS_PER_PHASE = 16
DEFAULT_DT = 0.1


@dataclass(frozen=True)
class ConstraintInstance:
    """One typed constraint over a timestep range.

    time_slice is half-open [start, end); point-style kinds use a
    single-step slice (t, t + 1).
    """

    kind: str
    time_slice: tuple[int, int]
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "time_slice", tuple(int(v) for v in self.time_slice))
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.kind not in EQ_KINDS + INEQ_KINDS:
            raise BadNLP(f"unknown constraint kind {self.kind!r}")

    @property
    def is_equality(self) -> bool:
        return self.kind in EQ_KINDS

    # -- constructors

    @staticmethod
    def point_at(t: int, target) -> "ConstraintInstance":
        return ConstraintInstance("point_at", (t, t + 1), tuple(target))

    @staticmethod
    def start_at(target) -> "ConstraintInstance":
        return ConstraintInstance("start_at", (0, 1), tuple(target))

    @staticmethod
    def on_plane(t0: int, t1: int, normal, d: float) -> "ConstraintInstance":
        return ConstraintInstance("on_plane", (t0, t1), (*normal, d))

    @staticmethod
    def in_box(t0: int, t1: int, lo, hi) -> "ConstraintInstance":
        return ConstraintInstance("in_box", (t0, t1), (*lo, *hi))

    @staticmethod
    def min_clearance(t0: int, t1: int, center, margin: float) -> "ConstraintInstance":
        return ConstraintInstance("min_clearance", (t0, t1), (*center, margin))

    @staticmethod
    def rest_at_phase_end(t: int) -> "ConstraintInstance":
        return ConstraintInstance("rest_at_phase_end", (t, t + 1), ())


def _param_arity(kind: str, n: int) -> int | None:
    return {
        "point_at": n,
        "start_at": n,
        "on_plane": n + 1,
        "in_box": 2 * n,
        "min_clearance": n + 1,
        "rest_at_phase_end": 0,
    }[kind]


@dataclass(frozen=True)
class NLPSpec:
    """Problem definition the solver consumes."""

    horizon: int
    dim: int
    constraints: tuple[ConstraintInstance, ...]
    phase_bounds: tuple[tuple[int, int], ...]
    dt: float = DEFAULT_DT
    w_acc: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "phase_bounds",
                           tuple(tuple(b) for b in self.phase_bounds))
        T, n = self.horizon, self.dim
        if T < 3:
            raise BadNLP(f"horizon must be at least 3, got {T}")
        if n < 1:
            raise BadNLP(f"state dimension must be positive, got {n}")
        if self.dt <= 0.0:
            raise BadNLP("dt must be positive")
        pins_start = False
        for c in self.constraints:
            t0, t1 = c.time_slice
            lo = 0 if c.kind != "rest_at_phase_end" else 1
            if not (lo <= t0 < t1 <= T):
                raise BadNLP(f"{c.kind} slice {c.time_slice} outside horizon {T}")
            want = _param_arity(c.kind, n)
            if len(c.params) != want:
                raise BadNLP(
                    f"{c.kind} expects {want} params for dim {n}, got {len(c.params)}")
            if c.kind in ("point_at", "start_at") and t0 == 0:
                pins_start = True
        if not pins_start:
            raise BadNLP("no equality constraint pins the state at t = 0")

    def trajectory(self, data: np.ndarray) -> Trajectory:
        return Trajectory(data=data, phase_bounds=self.phase_bounds, dt=self.dt)


# ---------------------------------------------------------------------------
# Objective and constraint evaluation


def acceleration_centers(T: int,
                         phase_bounds: tuple[tuple[int, int], ...] | None = None,
                         ) -> np.ndarray:
    """Interior timesteps whose 3-step window stays inside one phase.

    The jump between consecutive phases is a free repositioning, not a
    motion, so no acceleration is charged across a phase boundary.
    """
    if not phase_bounds:
        return np.arange(1, T - 1)
    idx: list[int] = []
    for s, e in phase_bounds:
        idx.extend(range(s + 1, e - 1))
    return np.asarray(idx, dtype=int)


def objective_value_grad(nlp: NLPSpec, x: Trajectory) -> tuple[float, np.ndarray]:
    """Summed squared acceleration with its exact gradient.

    value = w_acc * sum_t || (x[t+1] - 2 x[t] + x[t-1]) / dt^2 ||^2
    over interior timesteps of each phase; gradient has the
    trajectory's (T, n) shape.
    """
    data = x.data
    dt2 = nlp.dt ** 2
    c = acceleration_centers(data.shape[0], nlp.phase_bounds)
    grad = np.zeros_like(data)
    if c.size == 0:
        return 0.0, grad
    acc = (data[c + 1] - 2.0 * data[c] + data[c - 1]) / dt2
    value = nlp.w_acc * float(np.sum(acc * acc))
    # c is strictly increasing, so each of the three shifted index sets
    # is duplicate-free and plain fancy indexing accumulates correctly
    scaled = 2.0 * nlp.w_acc * acc / dt2
    grad[c + 1] += scaled
    grad[c] -= 2.0 * scaled
    grad[c - 1] += scaled
    return value, grad


def second_difference_matrix(T: int, dt: float,
                             phase_bounds: tuple[tuple[int, int], ...] | None = None,
                             ) -> np.ndarray:
    """Operator mapping states to accelerations, per coordinate.

    One row per valid window; (T-2) x T when phase_bounds is omitted.
    """
    centers = acceleration_centers(T, phase_bounds)
    D = np.zeros((len(centers), T))
    inv = 1.0 / dt ** 2
    for i, t in enumerate(centers):
        D[i, t - 1] = inv
        D[i, t] = -2.0 * inv
        D[i, t + 1] = inv
    return D


def constraint_rows(c: ConstraintInstance, n: int) -> int:
    t0, t1 = c.time_slice
    span = t1 - t0
    return {
        "point_at": n,
        "start_at": n,
        "on_plane": span,
        "in_box": 2 * n * span,
        "min_clearance": span,
        "rest_at_phase_end": n,
    }[c.kind]


def constraints_eval(nlp: NLPSpec, x: Trajectory):
    """Stacked equality and inequality values with dense Jacobians.

    Returns (h, g, Jh, Jg); Jacobian columns index the flattened (T*n)
    state in row-major order. Row order follows the constraint list,
    then timesteps, then components.
    """
    data = x.data
    T, n = nlp.horizon, nlp.dim
    N = T * n
    h_parts, g_parts = [], []
    Jh_parts, Jg_parts = [], []
    for c in nlp.constraints:
        t0, t1 = c.time_slice
        if c.kind in ("point_at", "start_at"):
            target = np.array(c.params)
            h_parts.append(data[t0] - target)
            J = np.zeros((n, N))
            J[np.arange(n), t0 * n + np.arange(n)] = 1.0
            Jh_parts.append(J)
        elif c.kind == "rest_at_phase_end":
            h_parts.append(data[t0] - data[t0 - 1])
            J = np.zeros((n, N))
            J[np.arange(n), t0 * n + np.arange(n)] = 1.0
            J[np.arange(n), (t0 - 1) * n + np.arange(n)] = -1.0
            Jh_parts.append(J)
        elif c.kind == "on_plane":
            normal = np.array(c.params[:n])
            d = c.params[n]
            for t in range(t0, t1):
                h_parts.append(np.array([normal @ data[t] - d]))
                J = np.zeros((1, N))
                J[0, t * n:(t + 1) * n] = normal
                Jh_parts.append(J)
        elif c.kind == "in_box":
            lo = np.array(c.params[:n])
            hi = np.array(c.params[n:])
            eye = np.arange(n)
            for t in range(t0, t1):
                g_parts.append(lo - data[t])
                J = np.zeros((n, N))
                J[eye, t * n + eye] = -1.0
                Jg_parts.append(J)
                g_parts.append(data[t] - hi)
                J = np.zeros((n, N))
                J[eye, t * n + eye] = 1.0
                Jg_parts.append(J)
        elif c.kind == "min_clearance":
            center = np.array(c.params[:n])
            margin = c.params[n]
            for t in range(t0, t1):
                delta = data[t] - center
                dist = max(float(np.linalg.norm(delta)), 1e-9)
                g_parts.append(np.array([margin - dist]))
                J = np.zeros((1, N))
                J[0, t * n:(t + 1) * n] = -delta / dist
                Jg_parts.append(J)
    h = np.concatenate(h_parts) if h_parts else np.zeros(0)
    g = np.concatenate(g_parts) if g_parts else np.zeros(0)
    Jh = np.vstack(Jh_parts) if Jh_parts else np.zeros((0, N))
    Jg = np.vstack(Jg_parts) if Jg_parts else np.zeros((0, N))
    return h, g, Jh, Jg


# ---------------------------------------------------------------------------
# Plan lowering


def actions_to_nlp(actions: dsl.ActionSequence, domain: str,
                   scene: SceneState,
                   steps_per_phase: int = DEFAULT_STEPS_PER_PHASE,
                   dt: float = DEFAULT_DT,
                   geom: BoardGeometry | None = None) -> NLPSpec:
    """Lower evaluated actions into an NLPSpec.

    Drawing: each draw_line becomes start/end point_at targets in world
    coordinates plus an on-plane constraint over its phase. Pushing:
    each push_motion becomes planar start/end point_at targets plus
    table bounds. Both get a start anchor and a zero-velocity equality
    at every internal phase boundary.
    """
    if domain not in ("draw", "push"):
        raise BadNLP(f"unknown domain {domain!r}")
    if not actions:
        raise BadNLP("plan has no actions to lower")
    K = int(steps_per_phase)
    if K < 3:
        raise BadNLP(f"steps_per_phase must be at least 3, got {K}")
    P = len(actions)
    T = P * K
    constraints: list[ConstraintInstance] = []

    if domain == "draw":
        geom = geom or BoardGeometry()
        n = 3
        normal, d = geom.plane()
        for k, action in enumerate(actions):
            if action.name != "draw_line":
                raise UnknownAction(
                    action.name,
                    f"action {action.name!r} has no drawing trajectory lowering")
            x0, y0, x1, y1 = (float(a) for a in action.args)
            w0 = geom.board_to_world(x0, y0)
            w1 = geom.board_to_world(x1, y1)
            if k == 0:
                constraints.append(ConstraintInstance.start_at(w0))
            constraints.append(ConstraintInstance.point_at(k * K, w0))
            constraints.append(ConstraintInstance.point_at((k + 1) * K - 1, w1))
            constraints.append(ConstraintInstance.on_plane(k * K, (k + 1) * K, normal, d))
            if k < P - 1:
                constraints.append(ConstraintInstance.rest_at_phase_end((k + 1) * K - 1))
    else:
        n = 2
        lo = (TABLE_BOUNDS[0][0], TABLE_BOUNDS[1][0])
        hi = (TABLE_BOUNDS[0][1], TABLE_BOUNDS[1][1])
        for k, action in enumerate(actions):
            if action.name != "push_motion":
                raise UnknownAction(
                    action.name,
                    f"action {action.name!r} has no pushing trajectory lowering")
            sx, sy, ex, ey = (float(a) for a in action.args)
            if k == 0:
                constraints.append(ConstraintInstance.start_at((sx, sy)))
            constraints.append(ConstraintInstance.point_at(k * K, (sx, sy)))
            constraints.append(ConstraintInstance.point_at((k + 1) * K - 1, (ex, ey)))
            constraints.append(ConstraintInstance.in_box(k * K, (k + 1) * K, lo, hi))
            if k < P - 1:
                constraints.append(ConstraintInstance.rest_at_phase_end((k + 1) * K - 1))

    return NLPSpec(horizon=T, dim=n, constraints=tuple(constraints),
                   phase_bounds=uniform_phases(P, K), dt=dt)


def assemble(template: dsl.PlanTemplate,
             alpha_c: Mapping[str, Union[float, Sequence[float]]],
             scene: SceneState, domain: str,
             steps_per_phase: int = DEFAULT_STEPS_PER_PHASE,
             dt: float = DEFAULT_DT,
             geom: BoardGeometry | None = None) -> NLPSpec:
    """Evaluate a template under a named parameter map and lower it.

    Raises UnboundParameter when the map misses a referenced parameter,
    UnknownFrame for bad scene accessors and UnknownAction for actions
    without a trajectory lowering in the given domain.
    """
    actions = dsl.evaluate_actions(template, alpha_c, scene)
    for action in actions:
        for arg in action.args:
            if isinstance(arg, float) and not math.isfinite(arg):
                raise BadNLP(f"action {action.name} has non-finite argument {arg}")
    return actions_to_nlp(actions, domain, scene,
                          steps_per_phase=steps_per_phase, dt=dt, geom=geom)
