"""Hybrid thermoregulator models.

Model A keeps spikes as fast continuous signals: 8 continuous states plus
8 switch states carried as frozen 0/1 entries of the state vector.  Model
B replaces each spike by an instantaneous pulse: 8 continuous states and
one jump per spike, with the buffer effect of a spike applied through a
closed-form jump ratio.  When the ambient temperature is time-varying, a
unit-rate clock state is appended so the systems stay autonomous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import circuit
from .circuit import CircuitParams
from .errors import WindowTooShort
from .hybrid import HybridArc, HybridSystem, JumpCondition

# State vector indices (models A and B share the continuous block)
IDX_T = 0
IDX_V1 = 1  # core warmth neuron
IDX_V2 = 2  # core cold neuron
IDX_V3 = 3  # ambient warmth neuron
IDX_V4 = 4  # ambient cold neuron
IDX_VFB = 5
IDX_VFF = 6
IDX_VLP = 7
IDX_SOUT = 8  # model A: output switches 8..11, buffer switches 12..15
IDX_SB = 12

N_CONT = 8
N_SWITCH = 8

MODEL_A_LABELS = tuple(
    [f"s{i}_out_toggle" for i in range(1, 5)]
    + [f"s{i}_b_toggle" for i in range(1, 5)]
)
MODEL_B_LABELS = tuple(f"neuron{i}_spike" for i in range(1, 5))


@dataclass(frozen=True)
class AmbientProfile:
    """Ambient temperature as a function of time: constant or linear ramp."""

    kind: str
    t_start: float
    t_end_value: float = 0.0
    duration: float = 0.0

    @classmethod
    def constant(cls, temperature: float) -> "AmbientProfile":
        return cls(kind="constant", t_start=temperature)

    @classmethod
    def ramp(cls, t_start: float, t_end_value: float, duration: float) -> "AmbientProfile":
        if duration <= 0:
            raise ValueError("ramp duration must be positive")
        return cls("ramp", t_start, t_end_value, duration)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.t_start
        frac = min(max(t / self.duration, 0.0), 1.0)
        return self.t_start + (self.t_end_value - self.t_start) * frac


@dataclass(frozen=True)
class SpikeConstants:
    """Spike duration and per-buffer jump ratio of the pulse model."""

    tau: float
    a: float

    def __post_init__(self):
        if self.tau <= 0 or not (0.0 < self.a < 1.0):
            raise ValueError("require tau > 0 and a in (0, 1)")


def spike_duration(p: CircuitParams, c_i: float) -> float:
    """Discharge duration tau = C_i * R5 * ln(V_on / V_off)."""
    if not p.v_off < p.v_on:
        raise ValueError("v_off must be below v_on")
    return c_i * p.r5 * math.log(p.v_on / p.v_off)


def jump_ratio(tau: float, p: CircuitParams, c_b: float) -> float:
    """Multiplicative buffer decay a = exp(-tau / (C_b * R4)) per spike."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return math.exp(-tau / (c_b * p.r4))


def spike_constants(p: CircuitParams, c_i: float, c_b: float) -> SpikeConstants:
    tau = spike_duration(p, c_i)
    return SpikeConstants(tau=tau, a=jump_ratio(tau, p, c_b))


def neuron_capacitances(p: CircuitParams) -> tuple:
    return (p.c1, p.c2, p.c3, p.c4)


def _gate_voltages(p: CircuitParams, t: float, t_amb: float) -> tuple:
    return (
        circuit.gate_voltage_warm(t, p),
        circuit.gate_voltage_cold(t, p),
        circuit.gate_voltage_warm(t_amb, p),
        circuit.gate_voltage_cold(t_amb, p),
    )


def default_initial_state(
    p: CircuitParams,
    model: str,
    temperature: float = 30.0,
    with_clock: bool = False,
) -> np.ndarray:
    """Deterministic start state: neuron voltages staggered just above
    v_off so no two neurons spike at the same instant, buffers neutral."""
    x = np.zeros(N_CONT)
    x[IDX_T] = temperature
    for i in range(4):
        x[IDX_V1 + i] = p.v_off + 0.01 * (i + 1)
    x[IDX_VFB] = p.half_v_a
    x[IDX_VFF] = p.half_v_a
    x[IDX_VLP] = 0.0
    if model == "a":
        x = np.concatenate([x, np.zeros(N_SWITCH)])
    elif model != "b":
        raise ValueError(f"unknown model {model!r}")
    if with_clock:
        x = np.concatenate([x, [0.0]])
    return x


def build_model_b(
    p: CircuitParams,
    ambient: AmbientProfile,
    freeze_plant: bool = False,
) -> HybridSystem:
    """Pulse model: 8 states, one jump condition per neuron at V_i >= v_on."""
    with_clock = not ambient.is_constant
    dim = N_CONT + (1 if with_clock else 0)
    caps = neuron_capacitances(p)
    buffer_caps = (p.c_fb, p.c_fb, p.c_ff, p.c_ff)
    ratios = tuple(
        jump_ratio(spike_duration(p, caps[i]), p, buffer_caps[i]) for i in range(4)
    )

    def flow(x):
        t_amb = ambient(x[-1]) if with_clock else ambient.t_start
        dx = np.zeros(dim)
        u = circuit.control_signal(x[IDX_VFB], x[IDX_VFF], p)
        dv_lp, v_out = circuit.lowpass_and_amp(u, x[IDX_VLP], p)
        if not freeze_plant:
            dx[IDX_T] = circuit.plant_derivative(x[IDX_T], t_amb, v_out, p)
        gates = _gate_voltages(p, x[IDX_T], t_amb)
        for i in range(4):
            dx[IDX_V1 + i] = circuit.i_fet(gates[i], p) / caps[i]
        dx[IDX_VFB] = circuit.buffer_derivative(x[IDX_VFB], 0, 0, p, p.c_fb)
        dx[IDX_VFF] = circuit.buffer_derivative(x[IDX_VFF], 0, 0, p, p.c_ff)
        dx[IDX_VLP] = dv_lp
        if with_clock:
            dx[-1] = 1.0
        return dx

    def make_condition(i):
        a = ratios[i]

        def guard(x, _i=i):
            return x[IDX_V1 + _i] - p.v_on

        def transform(x, _i=i, _a=a):
            y = x.copy()
            y[IDX_V1 + _i] = p.v_off
            if _i == 0:
                y[IDX_VFB] = _a * y[IDX_VFB] + (1.0 - _a) * p.v_a
            elif _i == 1:
                y[IDX_VFB] = _a * y[IDX_VFB]
            elif _i == 2:
                y[IDX_VFF] = _a * y[IDX_VFF] + (1.0 - _a) * p.v_a
            else:
                y[IDX_VFF] = _a * y[IDX_VFF]
            return y

        return JumpCondition(guard, transform, MODEL_B_LABELS[i])

    conditions = tuple(make_condition(i) for i in range(4))
    flow_guards = tuple(c.guard for c in conditions)
    return HybridSystem(
        state_dimension=dim,
        flow_map=flow,
        flow_guards=flow_guards,
        jump_conditions=conditions,
        name="thermoregulator-model-b",
    )


def build_model_a(
    p: CircuitParams,
    ambient: AmbientProfile,
) -> HybridSystem:
    """Full-spike model: 16 states, toggling output and buffer switches."""
    with_clock = not ambient.is_constant
    dim = N_CONT + N_SWITCH + (1 if with_clock else 0)
    caps = neuron_capacitances(p)
    # step cap during a discharge: the spike time constant is orders of
    # magnitude below the plant dynamics, adaptive control alone may
    # overstep the v_off crossing
    discharge_cap = min(spike_duration(p, c) for c in caps) / 20.0

    def flow(x):
        t_amb = ambient(x[-1]) if with_clock else ambient.t_start
        dx = np.zeros(dim)
        u = circuit.control_signal(x[IDX_VFB], x[IDX_VFF], p)
        dv_lp, v_out = circuit.lowpass_and_amp(u, x[IDX_VLP], p)
        dx[IDX_T] = circuit.plant_derivative(x[IDX_T], t_amb, v_out, p)
        gates = _gate_voltages(p, x[IDX_T], t_amb)
        for i in range(4):
            v = x[IDX_V1 + i]
            s_out = x[IDX_SOUT + i]
            dx[IDX_V1 + i] = (
                circuit.i_fet(gates[i], p) - v * s_out / p.r5
            ) / caps[i]
        dx[IDX_VFB] = circuit.buffer_derivative(
            x[IDX_VFB], x[IDX_SB + 0], x[IDX_SB + 1], p, p.c_fb
        )
        dx[IDX_VFF] = circuit.buffer_derivative(
            x[IDX_VFF], x[IDX_SB + 2], x[IDX_SB + 3], p, p.c_ff
        )
        dx[IDX_VLP] = dv_lp
        if with_clock:
            dx[-1] = 1.0
        return dx

    def make_out_condition(i):
        def guard(x, _i=i):
            if x[IDX_SOUT + _i] < 0.5:
                return x[IDX_V1 + _i] - p.v_on
            return p.v_off - x[IDX_V1 + _i]

        def transform(x, _i=i):
            y = x.copy()
            y[IDX_SOUT + _i] = 0.0 if y[IDX_SOUT + _i] > 0.5 else 1.0
            return y

        return JumpCondition(guard, transform, MODEL_A_LABELS[i])

    def make_buffer_condition(i):
        def guard(x, _i=i):
            v_out_i = x[IDX_V1 + _i] * x[IDX_SOUT + _i]
            if x[IDX_SB + _i] < 0.5:
                return v_out_i - p.v_th_switch
            return p.v_th_switch - v_out_i

        def transform(x, _i=i):
            y = x.copy()
            y[IDX_SB + _i] = 0.0 if y[IDX_SB + _i] > 0.5 else 1.0
            return y

        return JumpCondition(guard, transform, MODEL_A_LABELS[4 + i])

    conditions = tuple(
        [make_out_condition(i) for i in range(4)]
        + [make_buffer_condition(i) for i in range(4)]
    )
    flow_guards = tuple(c.guard for c in conditions)

    def step_limit(x):
        if np.any(x[IDX_SOUT:IDX_SOUT + 4] > 0.5):
            return discharge_cap
        return np.inf

    return HybridSystem(
        state_dimension=dim,
        flow_map=flow,
        flow_guards=flow_guards,
        jump_conditions=conditions,
        name="thermoregulator-model-a",
        step_limit=step_limit,
    )


def spike_times(arc: HybridArc, model: str) -> list:
    """Per-neuron arrays of spike instants.

    Model B: every jump is a spike of its neuron.  Model A: a spike is an
    output-switch transition from off to on.
    """
    out = []
    for i in range(4):
        if model == "b":
            mask = arc.jump_condition == i
        elif model == "a":
            mask = (arc.jump_condition == i) & (
                arc.jump_pre[:, IDX_SOUT + i] < 0.5
            )
        else:
            raise ValueError(f"unknown model {model!r}")
        out.append(arc.jump_t[mask])
    return out


def spike_frequencies(
    arc: HybridArc,
    window: float,
    model: str,
    times: Optional[np.ndarray] = None,
    expected_max_rate: float = 1000.0,
):
    """Sliding-window firing-rate series for the four neurons.

    Returns (times, rates) with rates of shape (4, len(times)).  The
    window is clipped at t=0 so early samples use the elapsed time.
    """
    if window <= 0 or window < 2.0 / expected_max_rate:
        raise WindowTooShort(
            f"window {window} s is below 2/expected_max_rate "
            f"({2.0 / expected_max_rate} s)"
        )
    if times is None:
        times = np.unique(arc.t)
    times = np.asarray(times, dtype=float)
    rates = np.zeros((4, len(times)))
    eff = np.minimum(times, window)
    valid = eff > 0
    for i, spikes in enumerate(spike_times(arc, model)):
        hi = np.searchsorted(spikes, times, side="right")
        lo = np.searchsorted(spikes, times - eff, side="right")
        rates[i, valid] = (hi - lo)[valid] / eff[valid]
    return times, rates


def mean_spike_rates(
    arc: HybridArc, model: str, t_start: float, t_end: float
) -> np.ndarray:
    """Average firing rate of each neuron over [t_start, t_end]."""
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    rates = np.zeros(4)
    for i, spikes in enumerate(spike_times(arc, model)):
        count = np.count_nonzero((spikes >= t_start) & (spikes <= t_end))
        rates[i] = count / (t_end - t_start)
    return rates
