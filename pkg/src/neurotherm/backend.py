"""Simulation backend selection.

The hot loop (event-located RK integration of the two thermoregulator
models) exists twice: a Cython kernel (``_fastsim``) and a pure-Python
fallback built on the generic hybrid solver.  The compiled kernel is
used when the extension import succeeds; set ``NEUROTHERM_BACKEND`` to
``python`` or ``compiled`` to force a choice.  Both backends produce
HybridArc objects with identical state layout and condition indexing.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

from . import models
from .circuit import CircuitParams, pack_params
from .hybrid import HybridArc, SolverConfig, solve
from .models import MODEL_A_LABELS, MODEL_B_LABELS, AmbientProfile

try:
    from . import _fastsim

    HAVE_COMPILED = True
except ImportError:  # extension not built; pure-Python path only
    _fastsim = None
    HAVE_COMPILED = False


def active_backend(override: Optional[str] = None) -> str:
    choice = override or os.environ.get("NEUROTHERM_BACKEND", "")
    if choice not in ("", "compiled", "python"):
        raise ValueError(f"unknown backend {choice!r}")
    if choice == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled backend requested but extension not built")
    if choice:
        return choice
    return "compiled" if HAVE_COMPILED else "python"


def _ambient_args(ambient: AmbientProfile):
    if ambient.is_constant:
        return 0, ambient.t_start, 0.0, 0.0
    return 1, ambient.t_start, ambient.t_end_value, ambient.duration


def _simulate_compiled(model_id, labels, x0, config, p, ambient, freeze_plant):
    amb_mode, a0, a1, adur = _ambient_args(ambient)
    out = _fastsim.simulate(
        model_id,
        pack_params(p),
        np.ascontiguousarray(x0, dtype=np.float64),
        config.t_end,
        config.j_max,
        amb_mode,
        a0,
        a1,
        adur,
        int(freeze_plant),
        config.integrator_rel_tol,
        config.integrator_abs_tol,
        config.max_step,
        config.event_tolerance,
        config.record_interval,
        config.zeno_jump_limit,
        config.zeno_min_progress,
    )
    ts, js, xs, jt, jj, jc, jpre, jpost = out
    return HybridArc(
        t=ts,
        j=js,
        states=xs,
        jump_t=jt,
        jump_j=jj,
        jump_condition=jc,
        jump_pre=jpre,
        jump_post=jpost,
        condition_labels=labels,
    )


def _strip_clock(arc: HybridArc, dim: int) -> HybridArc:
    """Drop the appended clock state so both backends agree on layout."""
    return HybridArc(
        t=arc.t,
        j=arc.j,
        states=arc.states[:, :dim],
        jump_t=arc.jump_t,
        jump_j=arc.jump_j,
        jump_condition=arc.jump_condition,
        jump_pre=arc.jump_pre[:, :dim] if arc.jump_pre.size else arc.jump_pre.reshape(0, dim),
        jump_post=arc.jump_post[:, :dim] if arc.jump_post.size else arc.jump_post.reshape(0, dim),
        condition_labels=arc.condition_labels,
    )


def simulate_model_b(
    p: CircuitParams,
    ambient: AmbientProfile,
    config: SolverConfig,
    initial_state=None,
    freeze_plant: bool = False,
    backend: Optional[str] = None,
) -> HybridArc:
    """Simulate the pulse model; returns an 8-state hybrid arc."""
    chosen = active_backend(backend)
    if initial_state is None:
        initial_state = models.default_initial_state(p, "b")
    x0 = np.asarray(initial_state, dtype=float)[: models.N_CONT]
    if chosen == "compiled":
        return _simulate_compiled(
            _fastsim.MODEL_B, MODEL_B_LABELS, x0, config, p, ambient, freeze_plant
        )
    system = models.build_model_b(p, ambient, freeze_plant=freeze_plant)
    if not ambient.is_constant:
        x0 = np.concatenate([x0, [0.0]])
    arc = solve(system, x0, config)
    return _strip_clock(arc, models.N_CONT)


def simulate_model_a(
    p: CircuitParams,
    ambient: AmbientProfile,
    config: SolverConfig,
    initial_state=None,
    backend: Optional[str] = None,
) -> HybridArc:
    """Simulate the full-spike model; returns a 16-state hybrid arc."""
    chosen = active_backend(backend)
    if initial_state is None:
        initial_state = models.default_initial_state(p, "a")
    dim = models.N_CONT + models.N_SWITCH
    x0 = np.asarray(initial_state, dtype=float)[:dim]
    if chosen == "compiled":
        return _simulate_compiled(
            _fastsim.MODEL_A, MODEL_A_LABELS, x0, config, p, ambient, False
        )
    system = models.build_model_a(p, ambient)
    if not ambient.is_constant:
        x0 = np.concatenate([x0, [0.0]])
    arc = solve(system, x0, config)
    return _strip_clock(arc, dim)
