"""Discrete-time trajectory container shared by the solver and both domains."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadNLP


@dataclass(frozen=True)
class Trajectory:
    """A T x n array of states plus contiguous phase index ranges.

    Parameters
    ----------
    data : np.ndarray
        Shape (T, n). Row t is the state at time t * dt.
    phase_bounds : tuple[tuple[int, int], ...]
        Half-open index ranges, one per plan action, covering [0, T)
        without gaps or overlap.
    dt : float
        Timestep in seconds.
    """

    data: np.ndarray
    phase_bounds: tuple[tuple[int, int], ...]
    dt: float = 0.1

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "phase_bounds", tuple(tuple(b) for b in self.phase_bounds))
        if data.ndim != 2:
            raise BadNLP(f"trajectory data must be 2-D, got shape {data.shape}")
        T = data.shape[0]
        if T < 3:
            raise BadNLP(f"trajectory needs at least 3 timesteps, got {T}")
        if not np.isfinite(data).all():
            raise BadNLP("trajectory contains non-finite values")
        if self.dt <= 0.0:
            raise BadNLP(f"dt must be positive, got {self.dt}")
        cursor = 0
        for start, end in self.phase_bounds:
            if start != cursor or end <= start:
                raise BadNLP(f"phase bounds {self.phase_bounds} do not tile [0, {T})")
            cursor = end
        if cursor != T:
            raise BadNLP(f"phase bounds {self.phase_bounds} do not cover [0, {T})")

    @property
    def horizon(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def num_phases(self) -> int:
        return len(self.phase_bounds)

    def to_dict(self) -> dict:
        return {
            "data": self.data.tolist(),
            "phase_bounds": [list(b) for b in self.phase_bounds],
            "dt": self.dt,
        }

    @staticmethod
    def from_dict(d: dict) -> "Trajectory":
        return Trajectory(
            data=np.asarray(d["data"], dtype=float),
            phase_bounds=tuple(tuple(b) for b in d["phase_bounds"]),
            dt=float(d["dt"]),
        )


def uniform_phases(num_phases: int, steps_per_phase: int) -> tuple[tuple[int, int], ...]:
    """Phase bounds for `num_phases` actions of equal length."""
    k = steps_per_phase
    return tuple((i * k, (i + 1) * k) for i in range(num_phases))
