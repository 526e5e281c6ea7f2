"""Event-locating hybrid solver.

Continuous flow is integrated with an adaptive Dormand-Prince RK45 pair
(scipy's implementation, which provides the dense output used for event
localization).  Jump-condition guards are monitored on every accepted
step; sign changes are bracketed and refined on the dense interpolant.
Jump-first priority is the default: whenever the state sits in the jump
set, jumps fire (ascending condition index, one per hybrid instant)
before flowing resumes.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from ..errors import BracketInvalid, IntegratorFailure, NoProgress
from .system import HybridArc, HybridSystem, SolverConfig


def locate_event(guard, interpolant, t_lo, t_hi, tolerance=1e-9):
    """Find (t*, state*) where ``guard`` crosses zero along a flow.

    ``interpolant`` maps t to the flow state (dense output, never
    extrapolation).  The bracket endpoints must have opposite guard signs,
    or one endpoint must already be within tolerance of zero.
    """
    g_lo = guard(interpolant(t_lo))
    if abs(g_lo) <= tolerance:
        return t_lo, np.asarray(interpolant(t_lo), dtype=float)
    g_hi = guard(interpolant(t_hi))
    if abs(g_hi) <= tolerance:
        return t_hi, np.asarray(interpolant(t_hi), dtype=float)
    if g_lo * g_hi > 0:
        raise BracketInvalid(
            f"guard has the same sign at both bracket endpoints "
            f"({g_lo:.3e}, {g_hi:.3e})"
        )
    t_star = brentq(
        lambda t: guard(interpolant(t)), t_lo, t_hi, xtol=1e-13, rtol=8.9e-16
    )
    return t_star, np.asarray(interpolant(t_star), dtype=float)


class _Recorder:
    def __init__(self, interval):
        self.interval = interval
        self.t = []
        self.j = []
        self.states = []
        self._last_t = -np.inf

    def add(self, t, j, x, force=False):
        if not force and self.interval > 0 and t - self._last_t < self.interval:
            return
        self.t.append(t)
        self.j.append(j)
        self.states.append(np.array(x, dtype=float))
        self._last_t = t


def solve(system: HybridSystem, initial_state, config: SolverConfig) -> HybridArc:
    """Simulate a hybrid system, producing a hybrid arc.

    Terminates when t >= t_end or j >= j_max.  Raises NoProgress when the
    state is in neither the flow nor the jump set, or when jumps
    accumulate without continuous time advancing.
    """
    x = np.asarray(initial_state, dtype=float).copy()
    if x.shape != (system.state_dimension,):
        raise ValueError(
            f"initial state has shape {x.shape}, expected "
            f"({system.state_dimension},)"
        )
    tol = config.event_tolerance
    conditions = system.jump_conditions
    jump_first = config.priority == "jump-first"

    rec = _Recorder(config.record_interval)
    jump_t, jump_j, jump_cond, jump_pre, jump_post = [], [], [], [], []

    t = 0.0
    j = 0
    zeno_run = 0

    def apply_jump(idx, t_now):
        nonlocal x, j, zeno_run
        pre = x.copy()
        post = np.asarray(conditions[idx].transform(pre), dtype=float)
        if post.shape != pre.shape:
            raise ValueError("jump transform changed the state dimension")
        jump_t.append(t_now)
        jump_j.append(j)
        jump_cond.append(idx)
        jump_pre.append(pre)
        jump_post.append(post)
        x = post
        j += 1
        zeno_run += 1
        if zeno_run > config.zeno_jump_limit:
            raise NoProgress(
                f"{zeno_run} jumps without continuous time advancing by "
                f"{config.zeno_min_progress} s (Zeno-like accumulation)"
            )
        rec.add(t_now, j, x, force=True)

    def pending_index():
        for k, cond in enumerate(conditions):
            if cond.guard(x) >= 0.0:
                return k
        return None

    def fire_pending():
        """Fire jumps at the current point until none is enabled."""
        while j < config.j_max:
            if not jump_first and system.in_flow_set(x, tol):
                return
            idx = pending_index()
            if idx is None:
                if not system.in_flow_set(x, tol):
                    raise NoProgress(
                        f"state at t={t} is in neither the flow set nor "
                        "the jump set"
                    )
                return
            apply_jump(idx, t)

    rec.add(t, j, x, force=True)
    fire_pending()

    while t < config.t_end and j < config.j_max:
        if not system.in_flow_set(x, tol):
            raise NoProgress(f"cannot flow at t={t}: outside the flow set")
        max_step = config.max_step
        if system.step_limit is not None:
            max_step = min(max_step, system.step_limit(x))
        integ = RK45(
            lambda _t, _x: system.flow_map(_x),
            t,
            x,
            config.t_end,
            max_step=max_step,
            rtol=config.integrator_rel_tol,
            atol=config.integrator_abs_tol,
        )
        g_prev = [cond.guard(x) for cond in conditions]
        jumped = False
        while integ.status == "running":
            msg = integ.step()
            if integ.status == "failed":
                raise IntegratorFailure(f"integrator failed at t={integ.t}: {msg}")
            dense = integ.dense_output()
            g_new = [cond.guard(integ.y) for cond in conditions]
            crossings = []
            for k, (g0, g1) in enumerate(zip(g_prev, g_new)):
                if g0 <= 0.0 < g1:
                    t_star, x_star = locate_event(
                        conditions[k].guard, dense, dense.t_min, dense.t_max, tol
                    )
                    crossings.append((t_star, k, x_star))
            if crossings:
                crossings.sort(key=lambda item: (item[0], item[1]))
                t_star, k, x_star = crossings[0]
                if t_star - t > config.zeno_min_progress:
                    zeno_run = 0
                t = t_star
                x = x_star
                rec.add(t, j, x, force=True)
                apply_jump(k, t)
                fire_pending()
                jumped = True
                break
            t = integ.t
            x = integ.y.copy()
            zeno_run = 0
            g_prev = g_new
            rec.add(t, j, x)
            if not system.in_flow_set(x, tol):
                # left the flow set without entering the jump set
                raise NoProgress(
                    f"state at t={t} is in neither the flow set nor the jump set"
                )
        if not jumped:
            # integrator reached t_end
            t = integ.t
            x = integ.y.copy()
            break

    rec.add(t, j, x, force=True)
    labels = tuple(c.label or f"condition_{i}" for i, c in enumerate(conditions))
    dim = system.state_dimension
    pre_arr = (
        np.array(jump_pre) if jump_pre else np.zeros((0, dim))
    )
    post_arr = (
        np.array(jump_post) if jump_post else np.zeros((0, dim))
    )
    arc = HybridArc(
        t=np.array(rec.t),
        j=np.array(rec.j),
        states=np.array(rec.states),
        jump_t=np.array(jump_t),
        jump_j=np.array(jump_j, dtype=np.int64),
        jump_condition=np.array(jump_cond, dtype=np.int64),
        jump_pre=pre_arr,
        jump_post=post_arr,
        condition_labels=labels,
    )
    return arc
