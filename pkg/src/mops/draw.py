"""Drawing domain: tilted whiteboard, pinhole camera, image-space costs.

World frame: z up, camera above the board looking straight down -z.
Board coordinates (u, v) in meters live on the tilted board plane with
the origin at the lower-left corner, u along world x and v up the slope.

Stroke costs operate purely on projected image geometry: each stroke is
a (start, vector) pair in pixels, image y growing downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsl import ActionSequence
from .errors import BehindCamera, PhaseMismatch
from .trajectory import Trajectory

_EPS = 1e-9


@dataclass(frozen=True)
class BoardGeometry:
    """Whiteboard pose: size in meters, world center, tilt about board x."""

    width: float = 0.64
    height: float = 0.48
    center: tuple[float, float, float] = (0.0, 0.4, 0.96)
    tilt_deg: float = 40.0

    @property
    def tilt_rad(self) -> float:
        return math.radians(self.tilt_deg)

    @property
    def u_axis(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0])

    @property
    def v_axis(self) -> np.ndarray:
        t = self.tilt_rad
        return np.array([0.0, math.cos(t), math.sin(t)])

    @property
    def normal(self) -> np.ndarray:
        t = self.tilt_rad
        return np.array([0.0, -math.sin(t), math.cos(t)])

    @property
    def origin(self) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return c - 0.5 * self.width * self.u_axis - 0.5 * self.height * self.v_axis

    def board_to_world(self, u: float, v: float) -> np.ndarray:
        """World position of board point (u, v)."""
        return self.origin + float(u) * self.u_axis + float(v) * self.v_axis

    def plane(self) -> tuple[np.ndarray, float]:
        """Unit normal n and offset d with n . x = d on the board plane."""
        n = self.normal
        d = float(n @ np.asarray(self.center, dtype=float))
        return n, d


@dataclass(frozen=True)
class CameraModel:
    """Ideal pinhole looking down -z; image y grows downward."""

    position: tuple[float, float, float] = (0.0, 0.45, 1.5)
    focal_px: float = 500.0
    image_width: int = 640
    image_height: int = 480
    principal: tuple[float, float] = (320.0, 240.0)

    def project(self, p) -> tuple[float, float]:
        p = np.asarray(p, dtype=float)
        cam = np.asarray(self.position, dtype=float)
        depth = cam[2] - p[2]
        if depth <= 1e-6:
            raise BehindCamera(f"point {p.tolist()} is not in front of the camera")
        px = self.principal[0] + self.focal_px * (p[0] - cam[0]) / depth
        py = self.principal[1] + self.focal_px * (cam[1] - p[1]) / depth
        return (float(px), float(py))


@dataclass(frozen=True)
class StrokeSet:
    """Projected strokes: row i of starts/vecs is (s_i, v_i) in pixels."""

    starts: np.ndarray
    vecs: np.ndarray

    def __post_init__(self):
        starts = np.atleast_2d(np.asarray(self.starts, dtype=float))
        vecs = np.atleast_2d(np.asarray(self.vecs, dtype=float))
        if starts.size == 0:
            starts = starts.reshape(0, 2)
        if vecs.size == 0:
            vecs = vecs.reshape(0, 2)
        if starts.shape != vecs.shape or starts.shape[1:] != (2,):
            raise ValueError(f"bad stroke arrays {starts.shape} vs {vecs.shape}")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "vecs", vecs)

    def __len__(self) -> int:
        return self.starts.shape[0]

    @property
    def ends(self) -> np.ndarray:
        return self.starts + self.vecs

    @staticmethod
    def from_pairs(pairs) -> "StrokeSet":
        if not pairs:
            return StrokeSet(np.zeros((0, 2)), np.zeros((0, 2)))
        starts = np.array([p[0] for p in pairs], dtype=float)
        vecs = np.array([p[1] for p in pairs], dtype=float)
        return StrokeSet(starts, vecs)


def extract_strokes(x: Trajectory, plan: ActionSequence,
                    geom: BoardGeometry | None = None,
                    camera: CameraModel | None = None) -> StrokeSet:
    """Project each drawing phase's first and last state into the image.

    The trajectory must have one phase per plan action and every action
    must be a draw_line; anything else raises PhaseMismatch.
    """
    camera = camera or CameraModel()
    if len(plan) != x.num_phases:
        raise PhaseMismatch(
            f"plan has {len(plan)} actions but trajectory has {x.num_phases} phases")
    for action in plan:
        if action.name != "draw_line":
            raise PhaseMismatch(f"cannot extract strokes from action {action.name!r}")
    pairs = []
    for start, end in x.phase_bounds:
        s = np.array(camera.project(x.data[start]))
        e = np.array(camera.project(x.data[end - 1]))
        pairs.append((s, e - s))
    return StrokeSet.from_pairs(pairs)


# ---------------------------------------------------------------------------
# Image-space stroke costs


@dataclass(frozen=True)
class DrawCostConfig:
    """Weights live in the formulas; this holds thresholds and guards."""

    pentagon_min_len: float = 50.0
    star_min_len: float = 35.0
    hash_min_len: float = 75.0
    size_penalty: float = 700.0
    structural_penalty: float = 1000.0
    intersect_weight: float = 200.0
    no_cross_penalty: float = 500.0
    # squared parameter-space distance charged to a crossing whose lines
    # are parallel, kept above any in-segment miss
    singular_surrogate: float = 2.0
    eps: float = 1e-9


DEFAULT_DRAW_COST = DrawCostConfig()


def _safe_norms(vecs: np.ndarray, eps: float) -> np.ndarray:
    return np.maximum(np.linalg.norm(vecs, axis=1), eps)


def _angle(a: np.ndarray, b: np.ndarray, eps: float) -> float:
    denom = max(float(np.linalg.norm(a)) * float(np.linalg.norm(b)), eps)
    return math.acos(min(1.0, max(-1.0, float(a @ b) / denom)))


def _structural_prefix(strokes: StrokeSet, expected: int, penalty: float):
    """Split wrong-count stroke sets: (penalty term, prefix actually scored)."""
    k = len(strokes)
    if k == expected:
        return 0.0, strokes
    m = min(k, expected)
    prefix = StrokeSet(strokes.starts[:m], strokes.vecs[:m])
    return penalty * abs(expected - k), prefix


def cost_pentagon(strokes: StrokeSet, cfg: DrawCostConfig = DEFAULT_DRAW_COST) -> float:
    """Regular-pentagon cost on 5 chained strokes in image space.

    Wrong stroke counts are charged 1000 per missing or extra stroke and
    the first min(count, 5) strokes are scored with the same terms, with
    index arithmetic modulo the reduced count.
    """
    structural, strokes = _structural_prefix(strokes, 5, cfg.structural_penalty)
    m = len(strokes)
    if m == 0:
        return structural
    s = strokes.starts
    v = strokes.vecs
    ends = strokes.ends
    lens = _safe_norms(v, cfg.eps)
    mean_len = float(np.mean(lens))

    c_conn = sum(float(np.sum((ends[i] - s[(i + 1) % m]) ** 2)) for i in range(m))
    c_len = float(np.var(lens)) / max(mean_len, cfg.eps) ** 2

    c = np.mean(s, axis=0)
    radii = _safe_norms(s - c, cfg.eps)
    mean_rad = float(np.mean(radii))
    c_rad = float(np.var(radii)) / max(mean_rad, cfg.eps) ** 2

    c_angle = sum(
        (_angle(-v[(i - 1) % m], v[i], cfg.eps) - 3.0 * math.pi / 5.0) ** 2
        for i in range(m))
    c_spacing = sum(
        (_angle(s[i] - c, s[(i + 1) % m] - c, cfg.eps) - 2.0 * math.pi / 5.0) ** 2
        for i in range(m))

    c_close = float(np.sum((s[0] - ends[m - 1]) ** 2))
    p_size = cfg.size_penalty if mean_len < cfg.pentagon_min_len else 0.0

    return (structural + 500.0 * c_conn + 500.0 * c_len + 300.0 * c_rad
            + 100.0 * c_angle + 100.0 * c_spacing + 200.0 * c_close + p_size)


def cost_star(strokes: StrokeSet, cfg: DrawCostConfig = DEFAULT_DRAW_COST) -> float:
    """Five-pointed-star cost on 10 chained strokes alternating radius.

    Even stroke starts are outer tips, odd ones inner valleys. Wrong
    counts are handled exactly like the pentagon cost.
    """
    structural, strokes = _structural_prefix(strokes, 10, cfg.structural_penalty)
    m = len(strokes)
    if m == 0:
        return structural
    s = strokes.starts
    v = strokes.vecs
    ends = strokes.ends
    lens = _safe_norms(v, cfg.eps)

    c_conn = sum(float(np.sum((ends[i] - s[(i + 1) % m]) ** 2)) for i in range(m))

    c = np.mean(s, axis=0)
    radii = _safe_norms(s - c, cfg.eps)
    outer = radii[0::2]
    inner = radii[1::2]
    mean_outer = float(np.mean(outer)) if outer.size else cfg.eps
    mean_inner = float(np.mean(inner)) if inner.size else cfg.eps
    var_outer = float(np.var(outer)) if outer.size else 0.0
    var_inner = float(np.var(inner)) if inner.size else 0.0
    c_rad = (500.0 * var_outer / max(mean_outer, cfg.eps) ** 2
             + 500.0 * var_inner / max(mean_inner, cfg.eps) ** 2)

    ratio = mean_outer / max(mean_inner, cfg.eps)
    if ratio < 1.5:
        c_ratio = 300.0 * (1.5 - ratio) ** 2
    else:
        c_ratio = 100.0 * (ratio - 2.0) ** 2

    c_angle = sum(
        (_angle(s[i] - c, s[(i + 1) % m] - c, cfg.eps) - math.pi / 5.0) ** 2
        for i in range(m))

    p_size = cfg.size_penalty if float(np.mean(lens)) < cfg.star_min_len else 0.0

    return structural + 100.0 * c_conn + c_rad + c_ratio + 100.0 * c_angle + p_size


def _segment_params(sh, vh, sv, vv, eps):
    """Line-intersection parameters (t_h, t_v), or None when parallel."""
    denom = float(vh[0] * vv[1] - vh[1] * vv[0])
    if abs(denom) < eps:
        return None
    d = sv - sh
    t_h = float(d[0] * vv[1] - d[1] * vv[0]) / denom
    t_v = float(d[0] * vh[1] - d[1] * vh[0]) / denom
    return (t_h, t_v)


def hash_terms(strokes: StrokeSet, cfg: DrawCostConfig = DEFAULT_DRAW_COST) -> dict:
    """Component breakdown of the hash cost; see cost_hash."""
    terms = {
        "structural": 0.0, "straight": 0.0, "parallel": 0.0, "perp": 0.0,
        "spacing": 0.0, "intersect": 0.0, "len_con": 0.0, "len_bal": 0.0,
        "size": 0.0,
    }
    structural, strokes = _structural_prefix(strokes, 4, cfg.structural_penalty)
    terms["structural"] = structural
    m = len(strokes)
    if m == 0:
        return terms
    s = strokes.starts
    v = strokes.vecs
    lens = _safe_norms(v, cfg.eps)
    mean_len = float(np.mean(lens))

    horiz = [i for i in range(m) if abs(v[i, 0]) > abs(v[i, 1])]
    vert = [i for i in range(m) if abs(v[i, 0]) <= abs(v[i, 1])]

    terms["straight"] = 100.0 * (
        sum((abs(v[i, 1]) / lens[i]) ** 2 for i in horiz)
        + sum((abs(v[i, 0]) / lens[i]) ** 2 for i in vert))
    terms["perp"] = 50.0 * sum(
        (float(v[i] @ v[j]) / (lens[i] * lens[j])) ** 2
        for i in horiz for j in vert)
    terms["size"] = cfg.size_penalty if mean_len < cfg.hash_min_len else 0.0

    if len(horiz) != 2 or len(vert) != 2:
        # cannot form the two-by-two grid; charge a flat structural
        # penalty on top of the orientation-independent terms
        terms["structural"] += cfg.structural_penalty
        return terms

    h1, h2 = horiz
    v1, v2 = vert
    d_ah = _angle(v[h1], v[h2], cfg.eps)
    d_ah = min(d_ah, math.pi - d_ah)
    d_av = _angle(v[v1], v[v2], cfg.eps)
    d_av = min(d_av, math.pi - d_av)
    terms["parallel"] = 50.0 * (d_ah ** 2 + d_av ** 2)

    d_h = abs(s[h1, 1] - s[h2, 1]) / max(mean_len, cfg.eps)
    d_v = abs(s[v1, 0] - s[v2, 0]) / max(mean_len, cfg.eps)
    terms["spacing"] = (300.0 * ((d_h - 0.33) ** 2 + (d_v - 0.33) ** 2)
                        + 100.0 * (d_h - d_v) ** 2)

    # intersection placement: each (horizontal, vertical) crossing should
    # sit at one-third or two-thirds along both segments; targets are
    # assigned by the cheapest of the four consistent third/two-third
    # labelings of the two horizontal and two vertical strokes.
    params = {}
    non_cross = 0.0
    for i in (h1, h2):
        for j in (v1, v2):
            tp = _segment_params(s[i], v[i], s[j], v[j], cfg.eps)
            params[(i, j)] = tp
            if tp is None or not (0.0 <= tp[0] <= 1.0 and 0.0 <= tp[1] <= 1.0):
                non_cross += cfg.no_cross_penalty
    best_quad = math.inf
    for vert_targets in (((v1, 1.0 / 3.0), (v2, 2.0 / 3.0)),
                         ((v1, 2.0 / 3.0), (v2, 1.0 / 3.0))):
        for horiz_targets in (((h1, 1.0 / 3.0), (h2, 2.0 / 3.0)),
                              ((h1, 2.0 / 3.0), (h2, 1.0 / 3.0))):
            t_along_h = dict(vert_targets)    # vertical stroke -> t on horizontal
            t_along_v = dict(horiz_targets)   # horizontal stroke -> t on vertical
            total = 0.0
            for i in (h1, h2):
                for j in (v1, v2):
                    tp = params[(i, j)]
                    if tp is None:
                        total += cfg.singular_surrogate
                    else:
                        total += ((tp[0] - t_along_h[j]) ** 2
                                  + (tp[1] - t_along_v[i]) ** 2)
            best_quad = min(best_quad, total)
    terms["intersect"] = cfg.intersect_weight * best_quad + non_cross

    terms["len_con"] = 50.0 * (
        ((lens[h1] - lens[h2]) / max(0.5 * (lens[h1] + lens[h2]), cfg.eps)) ** 2
        + ((lens[v1] - lens[v2]) / max(0.5 * (lens[v1] + lens[v2]), cfg.eps)) ** 2)
    total_len = max(float(np.sum(lens)), cfg.eps)
    terms["len_bal"] = 20.0 * (
        (lens[h1] + lens[h2] - lens[v1] - lens[v2]) / total_len) ** 2
    return terms


def cost_hash(strokes: StrokeSet, cfg: DrawCostConfig = DEFAULT_DRAW_COST) -> float:
    """Hash-mark cost on 4 strokes, two near-horizontal and two
    near-vertical, with crossings near the third points of each stroke.

    A 4-stroke set that does not classify into 2 horizontal plus 2
    vertical strokes is charged an extra 1000 on top of the terms that
    remain well defined. Wrong counts add 1000 per stroke of mismatch.
    """
    return float(sum(hash_terms(strokes, cfg).values()))
