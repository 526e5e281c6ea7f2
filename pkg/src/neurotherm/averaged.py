"""Averaged-model analysis and feedforward tuning.

The averaged control signal u~(T) is estimated by simulating the pulse
model with the plant frozen at each grid temperature and time-averaging
the shifted feedback-buffer voltage.  From the sampled curve we extract
the system-inherent set point (zero crossing), the linear actuation
slope c over a window, and the feedforward gain K* = alpha / c that
removes the ambient dependence of the averaged equilibrium.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from . import backend as _backend
from . import models
from .circuit import CircuitParams, NtcParams, gate_voltage_cold, gate_voltage_warm
from .errors import ConfigError, InsufficientSamples, MultipleCrossings, NoCrossing
from .hybrid import SolverConfig


@dataclass(frozen=True)
class AveragedModel:
    """Sampled averaged input curve with its fitted scalar summary.

    ``samples`` is an (n, 2) array of (temperature, u~) pairs sorted by
    temperature.  ``c`` is the effective linear actuation slope of
    B~(e) ~= c e, ``gamma`` the buffer leakage rate, ``k_star`` the
    tuned feedforward gain alpha / c.
    """

    samples: np.ndarray
    t_set: float
    c: float
    gamma: float
    alpha: float
    b_gain: float
    k_star: float

    def u_tilde(self, temperature: float) -> float:
        """Interpolate u~ at a temperature; extrapolation is flagged."""
        t = self.samples[:, 0]
        u = self.samples[:, 1]
        if temperature < t[0] or temperature > t[-1]:
            warnings.warn(
                f"u~ evaluated outside the sampled range at {temperature} degC; "
                "using linear extrapolation",
                stacklevel=2,
            )
            if temperature < t[0]:
                slope = (u[1] - u[0]) / (t[1] - t[0])
                return float(u[0] + slope * (temperature - t[0]))
            slope = (u[-1] - u[-2]) / (t[-1] - t[-2])
            return float(u[-1] + slope * (temperature - t[-1]))
        return float(np.interp(temperature, t, u))

    def b_tilde(self, e: float) -> float:
        """Averaged actuation B~(e) = b_gain * u~(T_set + e)."""
        return self.b_gain * self.u_tilde(self.t_set + e)

    def linearized(self) -> "AveragedModel":
        """Replace the sampled curve by its exact linear-regime tangent.

        Used when analysing the linear-regime equilibrium formulas, which
        presume B~(e) = c e exactly.
        """
        t = self.samples[:, 0]
        u = (self.c / self.b_gain) * (t - self.t_set)
        return replace(self, samples=np.column_stack([t, u]))


def default_sweep_config(hold: float) -> SolverConfig:
    return SolverConfig(
        t_end=hold,
        max_step=2e-3,
        record_interval=0.0,
    )


def average_u_fb(arc, p: CircuitParams, settle_fraction: float = 0.5) -> float:
    """Time-average of the shifted feedback-buffer voltage over the tail
    of an arc (the first part of the hold window is settling time)."""
    t = arc.t
    u = arc.states[:, models.IDX_VFB] - p.half_v_a
    t_cut = t[0] + settle_fraction * (t[-1] - t[0])
    mask = t >= t_cut
    t_sel = t[mask]
    u_sel = u[mask]
    span = t_sel[-1] - t_sel[0]
    if span <= 0:
        raise ValueError("averaging window has zero length")
    return float(np.trapezoid(u_sel, t_sel) / span)


def estimate_u_tilde(
    p: CircuitParams,
    t_grid: Sequence[float],
    hold: float = 20.0,
    settle_fraction: float = 0.5,
    backend: Optional[str] = None,
    config: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Sample u~(T) over a temperature grid; returns (n, 2) array.

    Each point is one pulse-model simulation with the plant temperature
    frozen (the time-scale separation premise taken literally) and the
    ambient held at the same value.
    """
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if config is None:
        config = default_sweep_config(hold)
    out = np.empty((len(t_grid), 2))
    for row, temperature in enumerate(t_grid):
        out[row, 0] = temperature
        out[row, 1] = _u_tilde_point(
            p, temperature, settle_fraction, backend, config
        )
    return out


def _u_tilde_point(p, temperature, settle_fraction, backend, config):
    x0 = models.default_initial_state(p, "b", temperature=temperature)
    arc = _backend.simulate_model_b(
        p,
        models.AmbientProfile.constant(temperature),
        config,
        initial_state=x0,
        freeze_plant=True,
        backend=backend,
    )
    return average_u_fb(arc, p, settle_fraction)


def find_t_set(
    samples: np.ndarray,
    refine: Optional[Callable[[float], float]] = None,
    refine_tol: float = 0.01,
) -> float:
    """Zero crossing of the sampled u~ curve in degrees Celsius.

    Linear interpolation of the unique sign change; when ``refine`` is
    given (a fresh u~ evaluator), the crossing is narrowed by bisection
    to +-refine_tol.
    """
    samples = np.asarray(samples, dtype=float)
    t = samples[:, 0]
    u = samples[:, 1]
    crossings = []
    for i in range(len(u) - 1):
        if u[i] == 0.0:
            crossings.append((t[i], t[i]))
        elif u[i] * u[i + 1] < 0.0:
            crossings.append((t[i], t[i + 1]))
    if u[-1] == 0.0:
        crossings.append((t[-1], t[-1]))
    if not crossings:
        raise NoCrossing("sampled u~ curve does not change sign")
    if len(crossings) > 1:
        raise MultipleCrossings(
            f"sampled u~ curve changes sign {len(crossings)} times; "
            "monotonicity is broken (parameterization bug?)"
        )
    lo, hi = crossings[0]
    if lo == hi:
        return float(lo)
    # linear interpolation on the bracketing segment
    i = np.searchsorted(t, lo)
    u_lo, u_hi = u[i], u[i + 1]
    t_star = lo + (hi - lo) * (-u_lo) / (u_hi - u_lo)
    if refine is None:
        return float(t_star)
    g_lo, g_hi = u_lo, u_hi
    while hi - lo > 2.0 * refine_tol:
        mid = 0.5 * (lo + hi)
        g_mid = refine(mid)
        if g_mid == 0.0:
            return float(mid)
        if (g_mid > 0.0) == (g_hi > 0.0):
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    return float(lo + (hi - lo) * (-g_lo) / (g_hi - g_lo))


def fit_slope_c(
    samples: np.ndarray,
    window: Tuple[float, float],
    b_gain: float,
) -> float:
    """Least-squares slope of u~ over the window, scaled by the DC gain
    of the actuation path; returns the effective slope c in 1/s/degC."""
    samples = np.asarray(samples, dtype=float)
    lo, hi = window
    mask = (samples[:, 0] >= lo) & (samples[:, 0] <= hi)
    if np.count_nonzero(mask) < 5:
        raise InsufficientSamples(
            f"only {np.count_nonzero(mask)} samples in window {window}; need >= 5"
        )
    slope = np.polyfit(samples[mask, 0], samples[mask, 1], 1)[0]
    return float(slope * b_gain)


def feedforward_gain(alpha: float, c: float) -> float:
    """Tuned feedforward gain K = alpha / c (zero when alpha is zero)."""
    if alpha == 0.0:
        return 0.0
    if c <= 0.0:
        raise ValueError("slope c must be positive")
    return alpha / c


def averaged_error_dynamics(
    e: float,
    d: float,
    m: AveragedModel,
    with_ff: bool,
) -> float:
    """Right-hand side of the averaged error dynamics.

    ``e`` is the core-temperature error from the set point, ``d`` the
    ambient disturbance; with feedforward the ambient actuation term is
    weighted by the tuned gain.
    """
    rate = -m.alpha * e + m.alpha * d - m.b_tilde(e)
    if with_ff:
        rate -= m.k_star * m.b_tilde(d)
    return rate


def steady_state_error(
    m: AveragedModel,
    d: float,
    with_ff: bool,
    e0: float = 0.0,
    duration: Optional[float] = None,
) -> float:
    """Numerically integrate the averaged error dynamics to steady state."""
    if duration is None:
        duration = 60.0 / m.alpha
    sol = solve_ivp(
        lambda _t, y: [averaged_error_dynamics(y[0], d, m, with_ff)],
        (0.0, duration),
        [e0],
        rtol=1e-12,
        atol=1e-12,
        method="RK45",
    )
    return float(sol.y[0, -1])


def equilibrium_error_formula(m: AveragedModel, d: float, with_ff: bool) -> float:
    """Closed-form linear-regime equilibrium error."""
    if with_ff:
        return (m.alpha - m.k_star * m.c) / (m.alpha + m.c) * d
    return m.alpha / (m.alpha + m.c) * d


def buffer_leakage_rate(p: CircuitParams) -> float:
    """Leakage rate of the buffer toward its neutral point, 1/s."""
    return 2.0 / (p.c_fb * p.r10)


def fit_averaged_model(
    p: CircuitParams,
    t_min: float = 0.0,
    t_max: float = 80.0,
    step: float = 1.0,
    hold: float = 20.0,
    window: Tuple[float, float] = (30.0, 50.0),
    backend: Optional[str] = None,
    refine_tol: float = 0.01,
    refine: bool = True,
) -> AveragedModel:
    """Full pipeline: sweep u~(T), locate T_set, fit c, tune K*."""
    if step <= 0 or t_min >= t_max:
        raise ConfigError("need t_min < t_max and step > 0")
    if step > t_max - t_min:
        raise ConfigError("grid step exceeds the sweep range")
    grid = np.arange(t_min, t_max + 0.5 * step, step)
    config = default_sweep_config(hold)
    samples = estimate_u_tilde(p, grid, hold=hold, backend=backend, config=config)
    refine_fn = None
    if refine:
        refine_fn = lambda temperature: _u_tilde_point(
            p, temperature, 0.5, backend, config
        )
    t_set = find_t_set(samples, refine=refine_fn, refine_tol=refine_tol)
    c = fit_slope_c(samples, window, p.b_gain)
    k_star = feedforward_gain(p.alpha, c)
    return AveragedModel(
        samples=samples,
        t_set=t_set,
        c=c,
        gamma=buffer_leakage_rate(p),
        alpha=p.alpha,
        b_gain=p.b_gain,
        k_star=k_star,
    )


def calibrate_ntc(
    p: CircuitParams,
    target_t_set: float = 39.84,
    b_lo: float = 1500.0,
    b_hi: float = 12000.0,
) -> CircuitParams:
    """Adjust the thermistor B-parameter so the warm/cold charge-current
    balance (and hence the set point) sits at the target temperature."""
    from scipy.optimize import brentq

    def imbalance(b_value):
        trial = p.with_ntc(NtcParams(r_25=p.ntc.r_25, b=b_value))
        return gate_voltage_warm(target_t_set, trial) - gate_voltage_cold(
            target_t_set, trial
        )

    f_lo, f_hi = imbalance(b_lo), imbalance(b_hi)
    if f_lo * f_hi > 0:
        raise ConfigError(
            f"cannot place the set point at {target_t_set} degC by varying "
            f"the B-parameter in [{b_lo}, {b_hi}] K"
        )
    b_star = brentq(imbalance, b_lo, b_hi, xtol=1e-8)
    return p.with_ntc(NtcParams(r_25=p.ntc.r_25, b=b_star))
