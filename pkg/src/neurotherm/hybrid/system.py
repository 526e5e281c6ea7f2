"""Generic hybrid dynamical system types.

A system flows while every flow guard is non-positive and jumps when a
jump-condition guard becomes non-negative.  Solutions are hybrid arcs
parameterized by continuous time ``t`` and a jump counter ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Guard = Callable[[np.ndarray], float]
Transform = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class JumpCondition:
    """A guard together with the state transform applied when it fires.

    The guard must be continuous along flows (switch states are constant
    between jumps, so guards may read them); the transform must preserve
    the state dimension.
    """

    guard: Guard
    transform: Transform
    label: str = ""


@dataclass(frozen=True)
class HybridSystem:
    """Flow map, flow guards and jump conditions of a hybrid system.

    ``step_limit``, when given, maps the current state to an additional
    max-step cap; it is how stiff phases (e.g. neuron discharge) request
    smaller steps without a globally tiny max_step.
    """

    state_dimension: int
    flow_map: Callable[[np.ndarray], np.ndarray]
    flow_guards: tuple = ()
    jump_conditions: tuple = ()
    name: str = ""
    step_limit: Optional[Callable[[np.ndarray], float]] = None

    def in_flow_set(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return all(g(x) <= tol for g in self.flow_guards)

    def in_jump_set(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return any(c.guard(x) >= -tol for c in self.jump_conditions)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings for one hybrid solve."""

    t_end: float
    j_max: int = 10**9
    max_step: float = 1e-2
    event_tolerance: float = 1e-9
    integrator_rel_tol: float = 1e-8
    integrator_abs_tol: float = 1e-10
    priority: str = "jump-first"  # or "flow-first"
    record_interval: float = 0.0  # 0 records every accepted step
    zeno_jump_limit: int = 1000
    zeno_min_progress: float = 1e-12

    def __post_init__(self):
        if self.max_step <= 0 or self.event_tolerance <= 0:
            raise ValueError("max_step and event_tolerance must be positive")
        if self.j_max < 0:
            raise ValueError("j_max must be non-negative")
        if self.priority not in ("jump-first", "flow-first"):
            raise ValueError(f"unknown priority {self.priority!r}")


@dataclass
class HybridArc:
    """A solution trajectory over hybrid time (t, j).

    ``t``, ``j`` and ``states`` are aligned sample arrays; jump records
    keep the exact pre/post states and the fired condition index even when
    samples are decimated.
    """

    t: np.ndarray
    j: np.ndarray
    states: np.ndarray
    jump_t: np.ndarray
    jump_j: np.ndarray  # jump counter before the jump
    jump_condition: np.ndarray
    jump_pre: np.ndarray
    jump_post: np.ndarray
    condition_labels: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.states = np.asarray(self.states, dtype=float)
        self.jump_t = np.asarray(self.jump_t, dtype=float)
        self.jump_j = np.asarray(self.jump_j, dtype=np.int64)
        self.jump_condition = np.asarray(self.jump_condition, dtype=np.int64)
        self.jump_pre = np.asarray(self.jump_pre, dtype=float)
        self.jump_post = np.asarray(self.jump_post, dtype=float)

    @property
    def jump_count(self) -> int:
        return len(self.jump_t)

    @property
    def final_time(self) -> float:
        return float(self.t[-1])

    @property
    def final_jumps(self) -> int:
        return int(self.j[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def jump_times_for(self, condition_index: int) -> np.ndarray:
        return self.jump_t[self.jump_condition == condition_index]

    def jump_counts_by_label(self) -> dict:
        counts: dict = {}
        for idx in self.jump_condition:
            if self.condition_labels and idx < len(self.condition_labels):
                key = self.condition_labels[idx]
            else:
                key = f"condition_{idx}"
            counts[key] = counts.get(key, 0) + 1
        return counts

    def validate(self) -> None:
        """Check hybrid-time monotonicity and jump bookkeeping."""
        if np.any(np.diff(self.t) < 0):
            raise ValueError("sample times must be non-decreasing")
        dj = np.diff(self.j)
        if np.any(dj < 0) or np.any(dj > 1):
            raise ValueError("jump counter must increase by at most 1")
        if self.jump_count != int(self.j[-1]) - int(self.j[0]):
            raise ValueError("jump records and j increments out of bijection")
