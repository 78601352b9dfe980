"""Independent reference evaluators used as oracles.

Every function here re-derives its result from the written formula with
plain loops and no helpers shared with the package, so agreement with
the package implementations is meaningful evidence, not tautology.
"""
import math

import numpy as np
from scipy.spatial.transform import Rotation


def _var(xs):
    # population variance, written out longhand
    xs = [float(x) for x in xs]
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / len(xs)


def _acos_clamped(x):
    return math.acos(min(1.0, max(-1.0, x)))


def ref_pentagon(starts, vecs, l_thresh=50.0):
    s = [np.asarray(p, dtype=float) for p in starts]
    v = [np.asarray(p, dtype=float) for p in vecs]
    n = len(s)
    assert n == 5
    lens = [max(float(np.linalg.norm(x)), 1e-9) for x in v]
    mean_len = sum(lens) / n

    conn = sum(float(np.sum((s[i] + v[i] - s[(i + 1) % n]) ** 2))
               for i in range(n))
    length = _var(lens) / max(mean_len, 1e-9) ** 2

    c = sum(s) / n
    radii = [max(float(np.linalg.norm(p - c)), 1e-9) for p in s]
    rad = _var(radii) / max(sum(radii) / n, 1e-9) ** 2

    angle = 0.0
    for i in range(n):
        a = -v[(i - 1) % n]
        b = v[i]
        cosang = float(a @ b) / max(float(np.linalg.norm(a)) * float(np.linalg.norm(b)), 1e-9)
        angle += (_acos_clamped(cosang) - 3.0 * math.pi / 5.0) ** 2

    spacing = 0.0
    for i in range(n):
        a = s[i] - c
        b = s[(i + 1) % n] - c
        cosang = float(a @ b) / max(float(np.linalg.norm(a)) * float(np.linalg.norm(b)), 1e-9)
        spacing += (_acos_clamped(cosang) - 2.0 * math.pi / 5.0) ** 2

    close = float(np.sum((s[0] - (s[4] + v[4])) ** 2))
    size = 700.0 if mean_len < l_thresh else 0.0
    return (500.0 * conn + 500.0 * length + 300.0 * rad
            + 100.0 * angle + 100.0 * spacing + 200.0 * close + size)


def ref_star(starts, vecs):
    s = [np.asarray(p, dtype=float) for p in starts]
    v = [np.asarray(p, dtype=float) for p in vecs]
    n = len(s)
    assert n == 10
    lens = [max(float(np.linalg.norm(x)), 1e-9) for x in v]

    conn = sum(float(np.sum((s[i] + v[i] - s[(i + 1) % n]) ** 2))
               for i in range(n))

    c = sum(s) / n
    radii = [max(float(np.linalg.norm(p - c)), 1e-9) for p in s]
    outer = [radii[i] for i in (0, 2, 4, 6, 8)]
    inner = [radii[i] for i in (1, 3, 5, 7, 9)]
    r_out = sum(outer) / 5.0
    r_in = sum(inner) / 5.0
    rad = (500.0 * _var(outer) / max(r_out, 1e-9) ** 2
           + 500.0 * _var(inner) / max(r_in, 1e-9) ** 2)

    rho = r_out / max(r_in, 1e-9)
    ratio = 300.0 * (1.5 - rho) ** 2 if rho < 1.5 else 100.0 * (rho - 2.0) ** 2

    angle = 0.0
    for i in range(n):
        a = s[i] - c
        b = s[(i + 1) % n] - c
        cosang = float(a @ b) / max(float(np.linalg.norm(a)) * float(np.linalg.norm(b)), 1e-9)
        angle += (_acos_clamped(cosang) - math.pi / 5.0) ** 2

    size = 700.0 if sum(lens) / n < 35.0 else 0.0
    return conn * 100.0 + rad + ratio + 100.0 * angle + size


def ref_hash(starts, vecs):
    s = [np.asarray(p, dtype=float) for p in starts]
    v = [np.asarray(p, dtype=float) for p in vecs]
    n = len(s)
    assert n == 4
    lens = [max(float(np.linalg.norm(x)), 1e-9) for x in v]
    mean_len = sum(lens) / n

    horiz = [i for i in range(n) if abs(v[i][0]) > abs(v[i][1])]
    vert = [i for i in range(n) if abs(v[i][0]) <= abs(v[i][1])]

    straight = 100.0 * (sum((abs(v[i][1]) / lens[i]) ** 2 for i in horiz)
                        + sum((abs(v[i][0]) / lens[i]) ** 2 for i in vert))
    perp = 50.0 * sum((float(v[i] @ v[j]) / (lens[i] * lens[j])) ** 2
                      for i in horiz for j in vert)
    size = 700.0 if mean_len < 75.0 else 0.0

    if len(horiz) != 2 or len(vert) != 2:
        return straight + perp + size + 1000.0

    h1, h2 = horiz
    v1, v2 = vert

    def axis_angle(a, b):
        cosang = float(a @ b) / max(float(np.linalg.norm(a)) * float(np.linalg.norm(b)), 1e-9)
        ang = _acos_clamped(cosang)
        return min(ang, math.pi - ang)

    parallel = 50.0 * (axis_angle(v[h1], v[h2]) ** 2 + axis_angle(v[v1], v[v2]) ** 2)

    d_h = abs(s[h1][1] - s[h2][1]) / max(mean_len, 1e-9)
    d_v = abs(s[v1][0] - s[v2][0]) / max(mean_len, 1e-9)
    spacing = (300.0 * ((d_h - 0.33) ** 2 + (d_v - 0.33) ** 2)
               + 100.0 * (d_h - d_v) ** 2)

    # crossing parameters via an explicit 2x2 linear solve per pair
    params = {}
    no_cross = 0.0
    for i in (h1, h2):
        for j in (v1, v2):
            A = np.array([[v[i][0], -v[j][0]], [v[i][1], -v[j][1]]])
            rhs = s[j] - s[i]
            if abs(float(np.linalg.det(A))) < 1e-9:
                params[(i, j)] = None
                no_cross += 500.0
                continue
            t = np.linalg.solve(A, rhs)
            params[(i, j)] = (float(t[0]), float(t[1]))
            if not (0.0 <= t[0] <= 1.0 and 0.0 <= t[1] <= 1.0):
                no_cross += 500.0
    best = math.inf
    third = 1.0 / 3.0
    for flip_v in (False, True):
        for flip_h in (False, True):
            t_on_h = {v1: 2.0 * third if flip_v else third,
                      v2: third if flip_v else 2.0 * third}
            t_on_v = {h1: 2.0 * third if flip_h else third,
                      h2: third if flip_h else 2.0 * third}
            total = 0.0
            for i in (h1, h2):
                for j in (v1, v2):
                    tp = params[(i, j)]
                    if tp is None:
                        total += 2.0
                    else:
                        total += (tp[0] - t_on_h[j]) ** 2 + (tp[1] - t_on_v[i]) ** 2
            best = min(best, total)
    intersect = 200.0 * best + no_cross

    len_con = 50.0 * (
        ((lens[h1] - lens[h2]) / max(0.5 * (lens[h1] + lens[h2]), 1e-9)) ** 2
        + ((lens[v1] - lens[v2]) / max(0.5 * (lens[v1] + lens[v2]), 1e-9)) ** 2)
    total_len = max(sum(lens), 1e-9)
    len_bal = 20.0 * ((lens[h1] + lens[h2] - lens[v1] - lens[v2]) / total_len) ** 2

    return (straight + parallel + perp + spacing + intersect
            + len_con + len_bal + size)


def ref_circle(points):
    p = [np.asarray(q, dtype=float) for q in points]
    n = len(p)
    c = sum(p) / n
    rad = sum((0.2 - float(np.linalg.norm(q - c))) ** 2 for q in p)
    neigh = 0.0
    for i in range(n):
        d = min(float(np.linalg.norm(p[j] - p[i])) for j in range(n) if j != i)
        neigh += (0.2 - d) ** 2
    return 1000.0 * rad + neigh


def ref_line(points):
    p = np.asarray(points, dtype=float)
    if float(np.var(p[:, 0])) < 1e-9:
        p = p[:, ::-1]
    xs, ys = p[:, 0], p[:, 1]
    n = len(xs)
    if float(np.var(xs)) < 1e-30:
        m_hat, b_hat = 0.0, float(np.mean(ys))
    else:
        # normal equations solved explicitly
        sx, sy = float(np.sum(xs)), float(np.sum(ys))
        sxx, sxy = float(xs @ xs), float(xs @ ys)
        m_hat = (n * sxy - sx * sy) / (n * sxx - sx * sx)
        b_hat = (sy - m_hat * sx) / n
    fit = sum((float(y) - (m_hat * float(x) + b_hat)) ** 2
              for x, y in zip(xs, ys)) / n
    direction = np.array([1.0, m_hat]) / math.hypot(1.0, m_hat)
    t = sorted(float(row @ direction) for row in p)
    gaps = [t[k + 1] - t[k] for k in range(n - 1)]
    space = _var(gaps) if gaps else 0.0
    return 1e4 * fit + 1e2 * space


def ref_push_avoid(pusher, box_rows, p_wall, p_target):
    pusher = np.asarray(pusher, dtype=float)
    box_rows = np.asarray(box_rows, dtype=float)
    p_wall = np.asarray(p_wall, dtype=float)
    p_target = np.asarray(p_target, dtype=float)
    p_box = box_rows[-1]
    p_init = box_rows[0]

    c_pos = float(np.sum((4.0 * (p_box - p_target)) ** 2))
    c_wall = -math.log(max(float(np.linalg.norm(p_wall - p_box)), 1e-9))
    c_init = -math.log(max(float(np.linalg.norm(p_box - p_init)), 0.001))
    T = len(pusher)
    c_endeff = sum(float(np.sum((4.0 * (box_rows[t] - pusher[t])) ** 2))
                   for t in range(T)) / T
    c_ew = -sum(float(np.linalg.norm(p_wall - pusher[t])) for t in range(T)) / T
    return (2.0 * c_pos + 0.01 * c_wall + 0.01 * c_init
            + 0.7 * c_endeff + 0.2 * c_ew)


def ref_board_point(u, v, width=0.64, height=0.48,
                    center=(0.0, 0.4, 0.96), tilt_deg=40.0):
    """Board (u, v) to world, via a rotation-matrix formulation."""
    R = Rotation.from_euler("x", tilt_deg, degrees=True).as_matrix()
    flat = np.array([u - width / 2.0, v - height / 2.0, 0.0])
    return np.asarray(center, dtype=float) + R @ np.array(
        [flat[0], flat[1], 0.0])


def ref_project(p, cam=(0.0, 0.45, 1.5), f=500.0, principal=(320.0, 240.0)):
    """Pinhole projection via homogeneous intrinsic/extrinsic matrices.

    Camera looks along world -z; image x follows world x, image y grows
    toward world -y (downward in the image).
    """
    K = np.array([[f, 0.0, principal[0]],
                  [0.0, f, principal[1]],
                  [0.0, 0.0, 1.0]])
    R = np.array([[1.0, 0.0, 0.0],
                  [0.0, -1.0, 0.0],
                  [0.0, 0.0, -1.0]])
    t = -R @ np.asarray(cam, dtype=float)
    pc = R @ np.asarray(p, dtype=float) + t
    uvw = K @ pc
    return (float(uvw[0] / uvw[2]), float(uvw[1] / uvw[2]))
