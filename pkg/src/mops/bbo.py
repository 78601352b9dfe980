"""Derivative-free optimizers sharing one ask/tell interface.

Three methods: CMA-ES (weighted recombination, cumulative step-size
adaptation, rank-1 plus rank-mu covariance update), probabilistic hill
climbing (Gaussian perturbations, occasional acceptance of worse
points) and plain random sampling around the initial guess.

Every method evaluates the initial guess first, is deterministic for a
fixed seed, never exceeds the evaluation budget, and tracks the
best-so-far cost after every single evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted, ConfigError

METHODS = ("cmaes", "hillclimb", "random")


@dataclass(frozen=True)
class BBOProblem:
    dim: int
    x0: tuple[float, ...]
    sigma0: float
    budget: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if self.dim < 1:
            raise ConfigError(f"dimension must be positive, got {self.dim}")
        if len(self.x0) != self.dim:
            raise ConfigError(f"x0 has {len(self.x0)} entries for dim {self.dim}")
        if self.sigma0 <= 0.0:
            raise ConfigError(f"sigma0 must be positive, got {self.sigma0}")
        if self.budget < 1:
            raise ConfigError(f"budget must be positive, got {self.budget}")


@dataclass
class BBOResult:
    best_x: np.ndarray
    best_cost: float
    history: list[tuple[int, float]]
    evaluations_used: int


def _sanitize(cost: float) -> float:
    cost = float(cost)
    return math.inf if math.isnan(cost) else cost


class _OptimizerBase:
    """Budgeted ask/tell loop shared by all methods.

    ask() returns a batch of candidates (trimmed to the remaining
    budget) and raises BudgetExhausted once the budget is used up;
    tell() consumes one cost per candidate of the last batch, in order.
    """

    def __init__(self, problem: BBOProblem):
        self.problem = problem
        self.rng = np.random.default_rng(problem.seed)
        self.x0 = np.array(problem.x0, dtype=float)
        self.evaluations_used = 0
        self.best_x = self.x0.copy()
        self.best_cost = math.inf
        self.history: list[tuple[int, float]] = []
        self._pending: list[np.ndarray] | None = None
        self._x0_done = False

    # -- subclass hooks

    def _propose(self, count: int) -> list[np.ndarray]:
        raise NotImplementedError

    def _absorb(self, candidates: list[np.ndarray], costs: list[float],
                truncated: bool) -> None:
        """Distribution update; truncated batches may be skipped."""

    # -- public interface

    @property
    def remaining(self) -> int:
        return self.problem.budget - self.evaluations_used

    def ask(self) -> list[np.ndarray]:
        if self._pending is not None:
            raise ConfigError("ask() called twice without tell()")
        if self.remaining <= 0:
            raise BudgetExhausted(
                f"budget of {self.problem.budget} evaluations used up")
        if not self._x0_done:
            batch = [self.x0.copy()]
        else:
            batch = self._propose(self.remaining)
        self._pending = batch
        return [c.copy() for c in batch]

    def tell(self, costs) -> None:
        if self._pending is None:
            raise ConfigError("tell() without a preceding ask()")
        batch = self._pending
        self._pending = None
        costs = [_sanitize(c) for c in costs]
        if len(costs) != len(batch):
            raise ConfigError(
                f"expected {len(batch)} costs, got {len(costs)}")
        for cand, cost in zip(batch, costs):
            self.evaluations_used += 1
            if cost < self.best_cost:
                self.best_cost = cost
                self.best_x = cand.copy()
            self.history.append((self.evaluations_used, self.best_cost))
        if not self._x0_done:
            self._x0_done = True
            self._absorb_x0(costs[0])
        else:
            self._absorb(batch, costs, truncated=len(batch) < self._full_batch())
        # nothing carries over; next ask() proposes fresh candidates

    def _absorb_x0(self, cost: float) -> None:
        pass

    def _full_batch(self) -> int:
        return 1

    def result(self) -> BBOResult:
        return BBOResult(
            best_x=self.best_x.copy(),
            best_cost=self.best_cost,
            history=list(self.history),
            evaluations_used=self.evaluations_used,
        )


class CmaEs(_OptimizerBase):
    """Standard (mu/mu_w, lambda) CMA-ES.

    Population 4 + floor(3 ln dim) unless overridden; log-linear
    recombination weights over the better half, cumulative paths for
    step size and covariance, rank-1 plus rank-mu updates.
    """

    def __init__(self, problem: BBOProblem, popsize: int | None = None):
        super().__init__(problem)
        N = problem.dim
        self.lam = popsize if popsize else 4 + int(3 * math.log(N))
        self.mu = self.lam // 2
        raw = np.log(self.lam / 2.0 + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = raw / raw.sum()
        self.mueff = float(1.0 / np.sum(self.weights ** 2))

        self.cc = (4.0 + self.mueff / N) / (N + 4.0 + 2.0 * self.mueff / N)
        self.cs = (self.mueff + 2.0) / (N + self.mueff + 5.0)
        self.c1 = 2.0 / ((N + 1.3) ** 2 + self.mueff)
        self.cmu = min(1.0 - self.c1,
                       2.0 * (self.mueff - 2.0 + 1.0 / self.mueff)
                       / ((N + 2.0) ** 2 + self.mueff))
        self.damps = 1.0 + 2.0 * max(0.0, math.sqrt((self.mueff - 1.0) / (N + 1.0)) - 1.0) + self.cs
        self.chiN = math.sqrt(N) * (1.0 - 1.0 / (4.0 * N) + 1.0 / (21.0 * N ** 2))

        self.mean = self.x0.copy()
        self.sigma = problem.sigma0
        self.C = np.eye(N)
        self.ps = np.zeros(N)
        self.pc = np.zeros(N)
        self.counteval = 0

    def _full_batch(self) -> int:
        return self.lam

    def _decompose(self):
        C = np.triu(self.C) + np.triu(self.C, 1).T  # enforce symmetry
        eigvals, B = np.linalg.eigh(C)
        eigvals = np.maximum(eigvals, 1e-20)
        return B, np.sqrt(eigvals)

    def _propose(self, count: int) -> list[np.ndarray]:
        B, D = self._decompose()
        self._B, self._D = B, D
        z = self.rng.standard_normal((self.lam, self.problem.dim))
        ys = (B * D) @ z.T  # columns are B D z_k
        xs = self.mean[None, :] + self.sigma * ys.T
        return [xs[k] for k in range(min(self.lam, count))]

    def _absorb(self, candidates, costs, truncated: bool) -> None:
        if truncated:
            return  # final partial generation cannot be recombined
        N = self.problem.dim
        order = np.argsort(costs, kind="stable")
        sel = np.array([candidates[i] for i in order[:self.mu]])
        old_mean = self.mean
        self.mean = self.weights @ sel
        shift = (self.mean - old_mean) / self.sigma
        self.counteval += self.lam

        B, D = self._B, self._D
        invsqrt_shift = B @ ((B.T @ shift) / D)
        self.ps = ((1.0 - self.cs) * self.ps
                   + math.sqrt(self.cs * (2.0 - self.cs) * self.mueff) * invsqrt_shift)
        expected_decay = math.sqrt(
            1.0 - (1.0 - self.cs) ** (2.0 * self.counteval / self.lam))
        hsig = (float(np.linalg.norm(self.ps)) / expected_decay / self.chiN
                < 1.4 + 2.0 / (N + 1.0))
        self.pc = ((1.0 - self.cc) * self.pc
                   + (math.sqrt(self.cc * (2.0 - self.cc) * self.mueff) * shift
                      if hsig else 0.0))
        c1a = self.c1 * (1.0 - (0.0 if hsig else 1.0) * self.cc * (2.0 - self.cc))
        ys = (sel - old_mean[None, :]) / self.sigma
        rank_mu = ys.T @ (self.weights[:, None] * ys)
        self.C = ((1.0 - c1a - self.cmu) * self.C
                  + self.c1 * np.outer(self.pc, self.pc)
                  + self.cmu * rank_mu)
        self.sigma *= math.exp(min(
            1.0, (self.cs / self.damps)
            * (float(np.linalg.norm(self.ps)) / self.chiN - 1.0)))


class HillClimb(_OptimizerBase):
    """Gaussian perturbations of the incumbent; improvements are always
    kept, worsening moves are kept with probability p_accept."""

    def __init__(self, problem: BBOProblem, p_accept: float = 0.05):
        super().__init__(problem)
        if not (0.0 <= p_accept < 1.0):
            raise ConfigError(f"p_accept must be in [0, 1), got {p_accept}")
        self.p_accept = p_accept
        self.current = self.x0.copy()
        self.current_cost = math.inf

    def _absorb_x0(self, cost: float) -> None:
        self.current_cost = cost

    def _propose(self, count: int) -> list[np.ndarray]:
        step = self.rng.standard_normal(self.problem.dim) * self.problem.sigma0
        return [self.current + step]

    def _absorb(self, candidates, costs, truncated: bool) -> None:
        cand, cost = candidates[0], costs[0]
        if cost < self.current_cost:
            self.current = cand.copy()
            self.current_cost = cost
        elif self.rng.uniform() < self.p_accept:
            self.current = cand.copy()
            self.current_cost = cost


class RandomSampler(_OptimizerBase):
    """Independent draws: Gaussian around x0 by default, or uniform in a
    box when bounds are given as (lo, hi) arrays."""

    def __init__(self, problem: BBOProblem, bounds=None):
        super().__init__(problem)
        if bounds is not None:
            lo = np.asarray(bounds[0], dtype=float)
            hi = np.asarray(bounds[1], dtype=float)
            if lo.shape != (problem.dim,) or hi.shape != (problem.dim,):
                raise ConfigError("bounds must be (lo, hi) of length dim")
            if np.any(hi <= lo):
                raise ConfigError("bounds must satisfy lo < hi")
            bounds = (lo, hi)
        self.bounds = bounds

    def _propose(self, count: int) -> list[np.ndarray]:
        if self.bounds is None:
            return [self.x0 + self.problem.sigma0
                    * self.rng.standard_normal(self.problem.dim)]
        lo, hi = self.bounds
        return [self.rng.uniform(lo, hi)]


def make_optimizer(method: str, problem: BBOProblem, **kwargs) -> _OptimizerBase:
    if method == "cmaes":
        return CmaEs(problem, **kwargs)
    if method == "hillclimb":
        return HillClimb(problem, **kwargs)
    if method == "random":
        return RandomSampler(problem, **kwargs)
    raise ConfigError(f"unknown optimizer {method!r}; choose from {METHODS}")


def minimize(method: str, fn, problem: BBOProblem, callback=None, **kwargs) -> BBOResult:
    """Run a full budgeted optimization of fn over the problem.

    Implemented directly on ask/tell, so stepping manually with the same
    seed reproduces this loop bit for bit. Non-finite costs are treated
    as +inf. callback, when given, sees (evaluations_used, best_cost)
    after every batch.
    """
    state = make_optimizer(method, problem, **kwargs)
    while state.remaining > 0:
        batch = state.ask()
        state.tell([fn(np.asarray(c)) for c in batch])
        if callback is not None:
            callback(state.evaluations_used, state.best_cost)
    return state.result()
