"""Build a small trajectory problem by hand and solve it.

Shows the three pieces most library users touch first: constraint
instances, NLPSpec assembly, and the solver's diagnostics.
"""
import numpy as np

from mops.nlp import ConstraintInstance, NLPSpec
from mops.solver import SolverOptions, solve

T, n = 24, 2
nlp = NLPSpec(
    horizon=T,
    dim=n,
    constraints=(
        ConstraintInstance.start_at((0.0, 0.0)),
        ConstraintInstance.point_at(T - 1, (1.0, 0.5)),
        # keep the whole path out of a disk around (0.5, 0.1)
        ConstraintInstance.min_clearance(1, T - 1, (0.5, 0.1), 0.2),
    ),
    phase_bounds=((0, T),),
    dt=0.1,
)

sol = solve(nlp, opts=SolverOptions(tol_constraint=1e-8,
                                    tol_stationarity=1e-8,
                                    rho_init=1e4))

print(f"converged:        {sol.converged}")
print(f"objective:        {sol.objective:.6g}")
print(f"max |h|:          {sol.max_h_violation:.3g}")
print(f"max g:            {sol.max_g_violation:.3g}")
print(f"outer iterations: {sol.outer_iters}")

dists = np.linalg.norm(sol.x.data - np.array([0.5, 0.1]), axis=1)
print(f"closest approach to the keep-out disk: {dists.min():.4f} m "
      f"(margin 0.2)")
print("first/last rows of the trajectory:")
print(np.round(sol.x.data[[0, 1, -2, -1]], 4))
