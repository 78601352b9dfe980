"""Augmented Lagrangian solver behaviour on small, checkable problems."""
import numpy as np
import pytest

from mops.errors import NonFiniteObjective
from mops.nlp import (
    ConstraintInstance,
    NLPSpec,
    constraints_eval,
    second_difference_matrix,
)
from mops.solver import SolverOptions, Solution, default_init, solve

TIGHT = SolverOptions(tol_constraint=1e-9, tol_stationarity=1e-9,
                      rho_init=1e4, rho_growth=10.0, rho_max=1e12)


def line_problem(T=16, n=3, start=(0.0, 0.0, 0.0), end=(1.0, -2.0, 0.5)):
    return NLPSpec(horizon=T, dim=n, constraints=(
        ConstraintInstance.start_at(start),
        ConstraintInstance.point_at(T - 1, end),
    ), phase_bounds=((0, T),), dt=0.1)


def test_two_point_problem_recovers_straight_line():
    nlp = line_problem()
    zeros = nlp.trajectory(np.zeros((nlp.horizon, nlp.dim)))
    sol = solve(nlp, x_init=zeros, opts=TIGHT)
    assert sol.converged
    t = np.arange(16.0)[:, None] / 15.0
    line = (1.0 - t) * np.array([0.0, 0.0, 0.0]) + t * np.array([1.0, -2.0, 0.5])
    assert np.max(np.abs(sol.x.data - line)) < 1e-6
    assert sol.objective < 1e-8
    assert sol.max_h_violation < 1e-9


def test_resolving_from_the_optimum_changes_nothing():
    nlp = line_problem()
    first = solve(nlp, opts=TIGHT)
    again = solve(nlp, x_init=first.x, opts=TIGHT)
    assert np.max(np.abs(again.x.data - first.x.data)) < 1e-12


def kkt_solution(nlp):
    """Equality-constrained QP solved through its optimality system."""
    T, n = nlp.horizon, nlp.dim
    D = second_difference_matrix(T, nlp.dt, nlp.phase_bounds)
    H = 2.0 * nlp.w_acc * np.kron(D.T @ D, np.eye(n))
    zero = nlp.trajectory(np.zeros((T, n)))
    h0, _, Jh, _ = constraints_eval(nlp, zero)
    A, b = Jh, -h0
    m = A.shape[0]
    kkt = np.block([[H, A.T], [A, np.zeros((m, m))]])
    rhs = np.concatenate([np.zeros(T * n), b])
    return np.linalg.solve(kkt, rhs)[:T * n].reshape(T, n)


def test_matches_kkt_solution_on_random_equality_qps():
    rng = np.random.default_rng(7)
    for _ in range(5):
        T, n = 8, 2
        normal = rng.normal(size=n)
        normal /= np.linalg.norm(normal)
        nlp = NLPSpec(horizon=T, dim=n, constraints=(
            ConstraintInstance.start_at(rng.normal(size=n)),
            ConstraintInstance.point_at(T - 1, rng.normal(size=n)),
            ConstraintInstance.on_plane(2, 5, normal, float(rng.normal())),
        ), phase_bounds=((0, T),), dt=0.5, w_acc=1.3)
        want = kkt_solution(nlp)
        sol = solve(nlp, opts=TIGHT)
        assert sol.converged
        assert np.max(np.abs(sol.x.data - want)) < 1e-6


def test_rest_plus_plane_quadratic_by_hand():
    # free variable is the shared endpoint x1 = x2; the objective reduces
    # to ||x2||^2 and the plane forces x2[0] + x2[1] = 2, so x2 = (1, 1)
    s = 1.0 / np.sqrt(2.0)
    nlp = NLPSpec(horizon=3, dim=2, constraints=(
        ConstraintInstance.start_at((0.0, 0.0)),
        ConstraintInstance.rest_at_phase_end(2),
        ConstraintInstance.on_plane(2, 3, (s, s), np.sqrt(2.0)),
    ), phase_bounds=((0, 3),), dt=1.0, w_acc=1.0)
    sol = solve(nlp, opts=TIGHT)
    assert sol.converged
    assert np.max(np.abs(sol.x.data[2] - 1.0)) < 1e-6
    assert np.max(np.abs(sol.x.data[2] - sol.x.data[1])) < 1e-8
    assert abs(sol.objective - 2.0) < 1e-6
    assert np.max(np.abs(sol.x.data - kkt_solution(nlp))) < 1e-6


def test_contradictory_targets_report_failure_honestly():
    a = np.array([1.0, 0.0])
    b = np.array([0.0, 1.0])
    nlp = NLPSpec(horizon=8, dim=2, constraints=(
        ConstraintInstance.start_at((0.0, 0.0)),
        ConstraintInstance.point_at(5, a),
        ConstraintInstance.point_at(5, b),
    ), phase_bounds=((0, 8),), dt=0.1)
    sol = solve(nlp, opts=SolverOptions(tol_constraint=1e-6, rho_init=10.0,
                                        rho_growth=10.0, rho_max=1e8))
    assert not sol.converged
    # whatever point the solver settles on, one target stays this far away
    assert sol.max_h_violation >= 0.5 * np.max(np.abs(a - b)) - 1e-9


def test_clearance_problem_converges_and_clears_the_obstacle():
    T = 12
    nlp = NLPSpec(horizon=T, dim=2, constraints=(
        ConstraintInstance.start_at((-1.0, -0.15)),
        ConstraintInstance.point_at(T - 1, (1.0, 0.15)),
        ConstraintInstance.min_clearance(1, T - 1, (0.0, 0.0), 0.5),
    ), phase_bounds=((0, T),), dt=0.1)
    opts = SolverOptions(tol_constraint=1e-6, tol_stationarity=1e-6,
                         rho_init=10.0, rho_growth=10.0, rho_max=1e8)
    diag: dict = {}
    sol = solve(nlp, opts=opts, diagnostics=diag)
    assert sol.converged
    dists = np.linalg.norm(sol.x.data[1:T - 1], axis=1)
    assert np.min(dists) >= 0.5 - 1e-5
    assert sol.max_g_violation <= opts.tol_constraint

    assert set(diag) == {"outer_violation", "inner_L", "rho"}
    assert len(diag["outer_violation"]) == sol.outer_iters
    assert len(diag["inner_L"]) == sol.outer_iters
    assert len(diag["rho"]) == sol.outer_iters
    assert diag["outer_violation"][-1] <= opts.tol_constraint
    for a, b in zip(diag["rho"], diag["rho"][1:]):
        assert b >= a
    for log in diag["inner_L"]:
        for a, b in zip(log, log[1:]):
            assert b <= a + 1e-9
    assert sol.inner_iters >= sum(len(log) - 1 for log in diag["inner_L"])


def test_default_init_interpolates_between_anchors():
    nlp = line_problem(T=6, n=2, start=(0.0, 0.0), end=(5.0, 10.0))
    init = default_init(nlp)
    want = np.arange(6.0)[:, None] * np.array([1.0, 2.0])
    assert np.allclose(init.data, want)


def test_default_init_holds_single_anchor_constant():
    nlp = NLPSpec(horizon=5, dim=2,
                  constraints=(ConstraintInstance.start_at((2.0, 3.0)),),
                  phase_bounds=((0, 5),), dt=0.1)
    init = default_init(nlp)
    assert np.allclose(init.data, [[2.0, 3.0]] * 5)


def test_default_init_two_phase_hand_values():
    nlp = NLPSpec(horizon=8, dim=2, constraints=(
        ConstraintInstance.start_at((0.0, 0.0)),
        ConstraintInstance.point_at(3, (3.0, -1.5)),
        ConstraintInstance.point_at(7, (1.0, 0.5)),
        ConstraintInstance.rest_at_phase_end(4),
    ), phase_bounds=((0, 4), (4, 8)), dt=0.1)
    init = default_init(nlp)
    want = np.array([
        [0.0, 0.0], [1.0, -0.5], [2.0, -1.0], [3.0, -1.5],
        [2.5, -1.0], [2.0, -0.5], [1.5, 0.0], [1.0, 0.5],
    ])
    assert np.allclose(init.data, want)


def test_default_init_first_anchor_wins_on_clashes():
    nlp = NLPSpec(horizon=6, dim=1, constraints=(
        ConstraintInstance.start_at((0.0,)),
        ConstraintInstance.point_at(4, (8.0,)),
        ConstraintInstance.point_at(4, (100.0,)),
    ), phase_bounds=((0, 6),), dt=0.1)
    assert default_init(nlp).data[4, 0] == 8.0


def test_bad_initial_trajectories_are_rejected():
    nlp = line_problem(T=5, n=2, start=(0.0, 0.0), end=(1.0, 1.0))
    other = line_problem(T=4, n=2, start=(0.0, 0.0), end=(1.0, 1.0))
    with pytest.raises(NonFiniteObjective):
        solve(nlp, x_init=default_init(other))
    poisoned = default_init(nlp)
    poisoned.data[3, 1] = np.nan
    with pytest.raises(NonFiniteObjective):
        solve(nlp, x_init=poisoned)


def test_option_validation():
    with pytest.raises(ValueError):
        SolverOptions(rho_growth=1.0)
    with pytest.raises(ValueError):
        SolverOptions(rho_init=0.0)
    with pytest.raises(ValueError):
        SolverOptions(rho_init=10.0, rho_max=1.0)
    opts = SolverOptions()
    assert opts.tol_constraint == 1e-4
    assert opts.max_outer == 30


def test_solution_reports_final_objective_consistently():
    nlp = line_problem(T=10, n=2, start=(0.0, 0.0), end=(0.0, 0.0))
    sol = solve(nlp, opts=TIGHT)
    assert isinstance(sol, Solution)
    assert sol.objective < 1e-12
    assert sol.x.data.shape == (10, 2)
