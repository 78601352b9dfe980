"""Augmented Lagrangian trajectory solver.

Equalities h(x) = 0 carry multipliers lambda, inequalities g(x) <= 0
carry mu with a squared-hinge augmentation max(0, g + mu/rho)^2. Each
outer iteration minimizes the AL with damped Gauss-Newton steps and an
Armijo backtracking line search (c = 1e-4, halving), then updates the
multipliers; the penalty weight rho grows only when the constraint
violation failed to halve. Linear solves are dense Cholesky with
Levenberg damping added when factorization fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import NonFiniteObjective
from .nlp import NLPSpec, second_difference_matrix
from .trajectory import Trajectory


@dataclass(frozen=True)
class SolverOptions:
    tol_constraint: float = 1e-4
    tol_stationarity: float = 1e-5
    rho_init: float = 1.0
    rho_growth: float = 2.0
    rho_max: float = 1e6
    max_outer: int = 30
    max_inner: int = 100
    armijo_c: float = 1e-4
    levenberg: float = 1e-8

    def __post_init__(self):
        if self.rho_growth <= 1.0:
            raise ValueError("rho_growth must exceed 1")
        if self.rho_init <= 0.0 or self.rho_max < self.rho_init:
            raise ValueError("need 0 < rho_init <= rho_max")


@dataclass
class Solution:
    x: Trajectory
    converged: bool
    max_h_violation: float
    max_g_violation: float
    objective: float
    outer_iters: int
    inner_iters: int


class _Compiled:
    """Precomputed linear structure of an NLPSpec over the flat state."""

    def __init__(self, nlp: NLPSpec):
        T, n = nlp.horizon, nlp.dim
        N = T * n
        self.N = N
        self.n = n
        D = second_difference_matrix(T, nlp.dt, nlp.phase_bounds)
        DtD = D.T @ D
        # objective f = w * ||D x||^2 per coordinate = 0.5 x^T H_f x
        self.H_f = 2.0 * nlp.w_acc * np.kron(DtD, np.eye(n))

        eq_rows: list[np.ndarray] = []
        eq_rhs: list[float] = []
        in_rows: list[np.ndarray] = []
        in_rhs: list[float] = []
        self.clearance: list[tuple[int, np.ndarray, float]] = []  # (t, center, margin)

        for c in nlp.constraints:
            t0, t1 = c.time_slice
            if c.kind in ("point_at", "start_at"):
                for i in range(n):
                    row = np.zeros(N)
                    row[t0 * n + i] = 1.0
                    eq_rows.append(row)
                    eq_rhs.append(c.params[i])
            elif c.kind == "rest_at_phase_end":
                for i in range(n):
                    row = np.zeros(N)
                    row[t0 * n + i] = 1.0
                    row[(t0 - 1) * n + i] = -1.0
                    eq_rows.append(row)
                    eq_rhs.append(0.0)
            elif c.kind == "on_plane":
                normal = np.array(c.params[:n])
                d = c.params[n]
                for t in range(t0, t1):
                    row = np.zeros(N)
                    row[t * n:(t + 1) * n] = normal
                    eq_rows.append(row)
                    eq_rhs.append(d)
            elif c.kind == "in_box":
                lo = c.params[:n]
                hi = c.params[n:]
                for t in range(t0, t1):
                    for i in range(n):
                        row = np.zeros(N)
                        row[t * n + i] = -1.0
                        in_rows.append(row)
                        in_rhs.append(-lo[i])
                    for i in range(n):
                        row = np.zeros(N)
                        row[t * n + i] = 1.0
                        in_rows.append(row)
                        in_rhs.append(hi[i])
            elif c.kind == "min_clearance":
                center = np.array(c.params[:n])
                margin = c.params[n]
                for t in range(t0, t1):
                    self.clearance.append((t, center, margin))

        self.A_eq = np.vstack(eq_rows) if eq_rows else np.zeros((0, N))
        self.b_eq = np.array(eq_rhs)
        self.A_in = np.vstack(in_rows) if in_rows else np.zeros((0, N))
        self.b_in = np.array(in_rhs)
        self.AtA_eq = self.A_eq.T @ self.A_eq
        self.p = self.A_eq.shape[0]
        self.q_lin = self.A_in.shape[0]
        self.q_nl = len(self.clearance)
        self.q = self.q_lin + self.q_nl

    def f_val_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        Hx = self.H_f @ x
        return 0.5 * float(x @ Hx), Hx

    def h_val(self, x: np.ndarray) -> np.ndarray:
        return self.A_eq @ x - self.b_eq

    def g_val_jac(self, x: np.ndarray):
        """Inequality values; Jacobian only for the nonlinear tail."""
        g_lin = self.A_in @ x - self.b_in
        if not self.clearance:
            return g_lin, np.zeros(0), np.zeros((0, self.N))
        n = self.n
        vals = np.empty(self.q_nl)
        J = np.zeros((self.q_nl, self.N))
        for r, (t, center, margin) in enumerate(self.clearance):
            delta = x[t * n:(t + 1) * n] - center
            dist = max(float(np.linalg.norm(delta)), 1e-9)
            vals[r] = margin - dist
            J[r, t * n:(t + 1) * n] = -delta / dist
        return g_lin, vals, J


def default_init(nlp: NLPSpec) -> Trajectory:
    """Piecewise-linear interpolation through the point anchors.

    Anchors are start_at and point_at targets in time order (first
    declaration wins on duplicate timesteps); the trajectory holds the
    first anchor before it and the last anchor after it.
    """
    anchors: dict[int, np.ndarray] = {}
    for c in nlp.constraints:
        if c.kind in ("start_at", "point_at"):
            anchors.setdefault(c.time_slice[0], np.array(c.params))
    data = np.zeros((nlp.horizon, nlp.dim))
    if anchors:
        ts = sorted(anchors)
        knots = np.array(ts, dtype=float)
        values = np.vstack([anchors[t] for t in ts])
        grid = np.arange(nlp.horizon, dtype=float)
        for i in range(nlp.dim):
            data[:, i] = np.interp(grid, knots, values[:, i])
    return nlp.trajectory(data)


def solve(nlp: NLPSpec, x_init: Trajectory | None = None,
          opts: SolverOptions = SolverOptions(),
          diagnostics: dict | None = None) -> Solution:
    """Minimize the acceleration objective subject to the constraint set.

    Returns the final trajectory with convergence status and the
    remaining constraint violations. Raises NonFiniteObjective when the
    iterates produce NaN or infinite values.
    """
    comp = _Compiled(nlp)
    if x_init is None:
        x_init = default_init(nlp)
    x = np.asarray(x_init.data, dtype=float).reshape(-1).copy()
    if x.size != comp.N:
        raise NonFiniteObjective(
            f"initial trajectory has {x.size} entries, expected {comp.N}")
    if not np.isfinite(x).all():
        raise NonFiniteObjective("initial trajectory is not finite")

    lam = np.zeros(comp.p)
    mu = np.zeros(comp.q)
    rho = opts.rho_init
    factor_cache: dict = {}
    cacheable = comp.q_nl == 0

    def al_value(xv: np.ndarray, parts=None):
        f, grad_f = comp.f_val_grad(xv)
        h = comp.h_val(xv)
        g_lin, g_nl, J_nl = comp.g_val_jac(xv)
        g = np.concatenate([g_lin, g_nl])
        s = g + mu / rho
        act = s > 0.0
        L = (f + float(lam @ h) + 0.5 * rho * float(h @ h)
             + 0.5 * rho * float(s[act] @ s[act]))
        if parts is not None:
            parts.update(f=f, grad_f=grad_f, h=h, g=g, s=s, act=act,
                         g_lin=g_lin, J_nl=J_nl)
        return L

    def al_grad(parts):
        grad = parts["grad_f"].copy()
        if comp.p:
            grad += comp.A_eq.T @ (lam + rho * parts["h"])
        act = parts["act"]
        s = parts["s"]
        act_lin = act[:comp.q_lin]
        if act_lin.any():
            grad += rho * (comp.A_in[act_lin].T @ s[:comp.q_lin][act_lin])
        act_nl = act[comp.q_lin:]
        if act_nl.any():
            grad += rho * (parts["J_nl"][act_nl].T @ s[comp.q_lin:][act_nl])
        return grad

    def newton_step(parts, grad):
        act_lin = parts["act"][:comp.q_lin]
        key = (rho, act_lin.tobytes()) if cacheable else None
        factor = factor_cache.get(key) if key is not None else None
        if factor is None:
            H = comp.H_f + rho * comp.AtA_eq
            if act_lin.any():
                A = comp.A_in[act_lin]
                H = H + rho * (A.T @ A)
            act_nl = parts["act"][comp.q_lin:]
            if act_nl.any():
                Jn = parts["J_nl"][act_nl]
                H = H + rho * (Jn.T @ Jn)
            damping = 0.0
            while True:
                try:
                    factor = cho_factor(
                        H + damping * np.eye(comp.N), lower=True, check_finite=False)
                    break
                except LinAlgError:
                    damping = opts.levenberg if damping == 0.0 else damping * 10.0
                    if damping > 1e8:
                        raise NonFiniteObjective("hessian factorization failed")
            if key is not None:
                factor_cache[key] = factor
        return cho_solve(factor, -grad, check_finite=False)

    converged = False
    prev_viol = math.inf
    outer_done = 0
    inner_total = 0
    if diagnostics is not None:
        diagnostics.setdefault("outer_violation", [])
        diagnostics.setdefault("inner_L", [])
        diagnostics.setdefault("rho", [])

    for outer in range(opts.max_outer):
        parts: dict = {}
        L = al_value(x, parts)
        if not math.isfinite(L):
            raise NonFiniteObjective("augmented objective is not finite")
        stationary = False
        inner_L_log = [L]
        for _ in range(opts.max_inner):
            grad = al_grad(parts)
            if not np.isfinite(grad).all():
                raise NonFiniteObjective("gradient is not finite")
            if float(np.max(np.abs(grad), initial=0.0)) <= opts.tol_stationarity * max(1.0, rho):
                stationary = True
                break
            step = newton_step(parts, grad)
            decrement = float(grad @ step)
            if decrement >= 0.0:
                break
            t = 1.0
            accepted = False
            for _ in range(60):
                trial = x + t * step
                trial_parts: dict = {}
                L_trial = al_value(trial, trial_parts)
                if math.isfinite(L_trial) and L_trial <= L + opts.armijo_c * t * decrement:
                    x = trial
                    L = L_trial
                    parts = trial_parts
                    accepted = True
                    break
                t *= 0.5
            inner_total += 1
            if not accepted:
                break
            inner_L_log.append(L)
            if float(np.max(np.abs(t * step), initial=0.0)) < 1e-14:
                stationary = True
                break

        h = parts["h"]
        g = parts["g"]
        viol_h = float(np.max(np.abs(h), initial=0.0))
        viol_g = float(np.max(g, initial=0.0))
        viol = max(viol_h, max(viol_g, 0.0))
        outer_done = outer + 1
        if diagnostics is not None:
            diagnostics["outer_violation"].append(viol)
            diagnostics["inner_L"].append(inner_L_log)
            diagnostics["rho"].append(rho)
        if viol <= opts.tol_constraint and stationary:
            converged = True
            break
        lam = lam + rho * h
        mu = np.maximum(0.0, mu + rho * g)
        if viol > 0.5 * prev_viol:
            new_rho = min(rho * opts.rho_growth, opts.rho_max)
            if new_rho != rho:
                rho = new_rho
        prev_viol = viol

    data = x.reshape(nlp.horizon, nlp.dim)
    if not np.isfinite(data).all():
        raise NonFiniteObjective("final trajectory is not finite")
    trajectory = nlp.trajectory(data)
    f_final, _ = comp.f_val_grad(x)
    h = comp.h_val(x)
    g_lin, g_nl, _ = comp.g_val_jac(x)
    g = np.concatenate([g_lin, g_nl])
    return Solution(
        x=trajectory,
        converged=converged,
        max_h_violation=float(np.max(np.abs(h), initial=0.0)),
        max_g_violation=float(np.max(g, initial=0.0)) if g.size else 0.0,
        objective=f_final,
        outer_iters=outer_done,
        inner_iters=inner_total,
    )
