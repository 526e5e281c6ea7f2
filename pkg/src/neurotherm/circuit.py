"""Component-level circuit equations and parameter handling.

All temperatures are in degrees Celsius at the interfaces; the Kelvin
conversion is internal to the thermistor model.  Everything here is a pure
function over an immutable parameter set, so the module is safe for
unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, SaturationViolated

CELSIUS_ZERO = 273.15
T_REF_K = 298.15  # 25 degC reference of the thermistor B-parameter model


@dataclass(frozen=True)
class NtcParams:
    """B-parameter model of an NTC thermistor.

    ``r_25`` is the resistance at 25 degC and ``b`` the B-parameter in
    kelvin.  Defaults correspond to a 470 kOhm part whose resistance
    passes through ~227 kOhm near 39.8 degC, which places the
    system-inherent set point of the default divider network there.
    """

    r_25: float = 470e3
    b: float = 4570.0

    def __post_init__(self):
        if self.r_25 <= 0 or self.b <= 0:
            raise ConfigError("NTC parameters r_25 and b must be positive")


@dataclass(frozen=True)
class CircuitParams:
    """All component values of the thermoregulator circuit.

    Resistances in ohms, capacitances in farads, voltages in volts.
    ``r4``/``r5`` belong to the neuron and buffer stages; the low-pass and
    output-amplifier stages reuse the same nominal values under the
    distinct names ``r_lp_*`` and ``r_amp_*`` so each equation is bound to
    an unambiguous component.
    """

    r1: float = 39e3
    r2: float = 100e3
    r3: float = 470e3
    r4: float = 10e3
    r5: float = 1e3
    r6: float = 200e3
    r7: float = 82e3
    r8: float = 1.0
    r9: float = 1e6
    r10: float = 10e6
    c1: float = 0.047e-6
    c2: float = 0.047e-6
    c3: float = 0.047e-6  # ambient warm neuron, same part as c1
    c4: float = 0.047e-6  # ambient cold neuron, same part as c2
    c_fb: float = 0.47e-6  # buffer capacitor; sets spike jump size and leakage
    c_ff: float = 0.47e-6  # same part as c_fb for the ambient-sensing buffer
    c_lp: float = 0.47e-6
    v_cc: float = 10.0
    v_a: float = 2.0
    v_b: float = 1.0  # present on the board, unused in the dynamics
    v_on: float = 7.4
    v_off: float = 1.0
    v_th_switch: float = 1.0  # buffer input-switch threshold on neuron output
    k_p: float = 5e-6  # MOSFET transconductance, A/V^2
    v_th_fet: float = 0.7  # MOSFET threshold voltage
    v_s: float = 10.0  # source voltage, equal to v_cc
    alpha: float = 2.0  # plant heat-exchange rate, 1/s
    actuator_gain: float = 2.0  # degC/(s*V)
    k_ff: float = 0.0  # feedforward gain K (dimensionless)
    ntc: NtcParams = field(default_factory=NtcParams)
    r_lp_in: float = 1e6  # low-pass series resistor (nominal r9)
    r_lp_gnd: float = 10e6  # low-pass shunt resistor (nominal r10)
    r_amp_fb: float = 10e3  # amplifier feedback resistor (nominal r4)
    r_amp_gnd: float = 1e3  # amplifier ground resistor (nominal r5)

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("ntc",):
                continue
            value = getattr(self, f.name)
            if f.name.startswith(("r", "c")) and value <= 0:
                raise ConfigError(f"{f.name} must be positive, got {value}")
        if self.v_off <= 0 or self.v_a <= 0 or self.k_p <= 0:
            raise ConfigError("v_off, v_a and k_p must be positive")
        if not (self.v_off <= self.v_th_switch < self.v_on < self.v_cc):
            raise ConfigError(
                "thresholds must satisfy v_off <= v_th_switch < v_on < v_cc"
            )
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.k_ff < 0:
            raise ConfigError("k_ff must be non-negative")

    @property
    def half_v_a(self) -> float:
        return 0.5 * self.v_a

    @property
    def amplifier_gain(self) -> float:
        return 1.0 + self.r_amp_fb / self.r_amp_gnd

    @property
    def lowpass_dc_gain(self) -> float:
        return self.r_lp_gnd / (self.r_lp_in + self.r_lp_gnd)

    @property
    def b_gain(self) -> float:
        """DC gain of the actuation path: actuator * amplifier * low-pass."""
        return self.actuator_gain * self.amplifier_gain * self.lowpass_dc_gain

    def with_feedforward(self, k_ff: float) -> "CircuitParams":
        return replace(self, k_ff=k_ff)

    def with_ntc(self, ntc: NtcParams) -> "CircuitParams":
        return replace(self, ntc=ntc)


def ntc_resistance(t_celsius: float, ntc: NtcParams) -> float:
    """Thermistor resistance R_25 * exp(B * (1/T - 1/T_25)) in ohms."""
    if t_celsius <= -CELSIUS_ZERO:
        raise ValueError("temperature below absolute zero")
    t_kelvin = t_celsius + CELSIUS_ZERO
    return ntc.r_25 * math.exp(ntc.b * (1.0 / t_kelvin - 1.0 / T_REF_K))


def gate_voltage_warm(t_celsius: float, p: CircuitParams) -> float:
    """Gate voltage of the warmth-sensing divider; decreasing in T."""
    r_ntc = ntc_resistance(t_celsius, p.ntc)
    load = 1.0 / p.r3 + 1.0 / (r_ntc + p.r2)
    return p.v_cc / (1.0 + 0.5 * p.r1 * load)


def gate_voltage_cold(t_celsius: float, p: CircuitParams) -> float:
    """Gate voltage of the cold-sensing divider; increasing in T."""
    r_ntc = ntc_resistance(t_celsius, p.ntc)
    parallel = 1.0 / (1.0 / (p.r2 + p.r7) + 1.0 / (p.r8 + r_ntc))
    return p.v_cc * p.r9 / (p.r9 + parallel)


def i_fet(v_gate: float, p: CircuitParams) -> float:
    """Drain current magnitude K_p * (V_G - V_S - V_th)^2 in saturation."""
    overdrive = v_gate - p.v_s - p.v_th_fet
    if overdrive >= 0.0:
        raise SaturationViolated(
            f"gate voltage {v_gate} V leaves the saturation region "
            f"(V_S={p.v_s}, V_th={p.v_th_fet})"
        )
    return p.k_p * overdrive * overdrive


def charge_time(v_gate: float, p: CircuitParams, c_i: float) -> float:
    """Time to charge the neuron capacitor from v_off to v_on at constant
    current (the discharge branch is open while charging)."""
    return c_i * (p.v_on - p.v_off) / i_fet(v_gate, p)


def neuron_rate(v_gate: float, p: CircuitParams, c_i: float) -> float:
    """Steady firing rate 1 / (t_charge + tau) in hertz.

    ``tau`` is the closed-form spike duration of the discharge phase.
    Used for analysis and acceptance checks, not inside simulations.
    """
    tau = c_i * p.r5 * math.log(p.v_on / p.v_off)
    return 1.0 / (charge_time(v_gate, p, c_i) + tau)


def plant_derivative(t: float, t_amb: float, v_out: float, p: CircuitParams) -> float:
    """Core temperature rate: heat exchange minus actuation."""
    return p.alpha * (t_amb - t) - p.actuator_gain * v_out


def buffer_derivative(
    v_b: float, s_warm: float, s_cold: float, p: CircuitParams, c_b: float
) -> float:
    """Buffer capacitor voltage rate with leakage and switched drive terms."""
    dv = -(2.0 * v_b - p.v_a) / (c_b * p.r10)
    if s_warm:
        dv += (p.v_a - v_b) / (c_b * p.r4)
    if s_cold:
        dv -= v_b / (c_b * p.r4)
    return dv


def lowpass_and_amp(u: float, v_lp: float, p: CircuitParams):
    """Low-pass capacitor rate and amplified output voltage."""
    dv_lp = (u - v_lp) / (p.c_lp * p.r_lp_in) - v_lp / (p.c_lp * p.r_lp_gnd)
    v_out = p.amplifier_gain * v_lp
    return dv_lp, v_out


def combine_control(u_fb: float, u_ff: float, k_ff: float) -> float:
    """Weighted sum of the shifted feedback and feedforward signals."""
    return u_fb + k_ff * u_ff


def control_signal(v_fb: float, v_ff: float, p: CircuitParams) -> float:
    """Control input from raw buffer voltages, shifted to the neutral point."""
    return combine_control(v_fb - p.half_v_a, v_ff - p.half_v_a, p.k_ff)


def gate_equality_root(p: CircuitParams, lo: float = 0.0, hi: float = 100.0) -> float:
    """Temperature where the warm and cold gate voltages are equal.

    This is the charge-current balance point of the two sensing paths and
    an independent predictor of the system-inherent set point.
    """
    from scipy.optimize import brentq

    def diff(t):
        return gate_voltage_warm(t, p) - gate_voltage_cold(t, p)

    d_lo, d_hi = diff(lo), diff(hi)
    if d_lo * d_hi > 0:
        raise ConfigError(
            f"gate voltages do not cross in [{lo}, {hi}] degC; "
            "check the thermistor parameters"
        )
    return brentq(diff, lo, hi, xtol=1e-10)


# Packed parameter vector layout shared with the compiled kernel.  Order
# matters: the Cython module indexes positions, the fallback goes through
# CircuitParams directly, and the backend parity test guards the mapping.
PARAM_FIELDS = (
    "r1", "r2", "r3", "r4", "r5", "r7", "r8", "r9", "r10",
    "c1", "c2", "c3", "c4", "c_fb", "c_ff", "c_lp",
    "v_cc", "v_a", "v_on", "v_off", "v_th_switch",
    "k_p", "v_th_fet", "v_s",
    "alpha", "actuator_gain",
    "ntc_r25", "ntc_b",
    "r_lp_in", "r_lp_gnd", "r_amp_fb", "r_amp_gnd",
    "k_ff",
)


def pack_params(p: CircuitParams) -> np.ndarray:
    values = []
    for name in PARAM_FIELDS:
        if name == "ntc_r25":
            values.append(p.ntc.r_25)
        elif name == "ntc_b":
            values.append(p.ntc.b)
        else:
            values.append(float(getattr(p, name)))
    return np.asarray(values, dtype=np.float64)


# Flat key = value parameter files -------------------------------------------

_SCALAR_KEYS = tuple(
    f.name for f in fields(CircuitParams) if f.name != "ntc"
)
_NTC_KEYS = ("ntc_r25", "ntc_b")


def parse_flat_file(path) -> dict:
    """Parse a flat ``key = value`` file with ``#`` comments.

    Returns a dict of raw string values.  Raises ConfigError with a line
    diagnostic on malformed lines or duplicate keys.
    """
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
            entries[key] = value
    return entries


def _parse_float(key: str, value: str, path) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{path}: field '{key}': not a number: {value!r}") from exc


def load_params(path) -> CircuitParams:
    """Load CircuitParams from a flat key-value file.

    Missing keys keep their defaults; unknown keys are errors.
    """
    entries = parse_flat_file(path)
    kwargs = {}
    ntc_kwargs = {}
    for key, value in entries.items():
        if key in _SCALAR_KEYS:
            kwargs[key] = _parse_float(key, value, path)
        elif key == "ntc_r25":
            ntc_kwargs["r_25"] = _parse_float(key, value, path)
        elif key == "ntc_b":
            ntc_kwargs["b"] = _parse_float(key, value, path)
        else:
            raise ConfigError(f"{path}: unknown parameter key '{key}'")
    try:
        ntc = NtcParams(**ntc_kwargs)
        return CircuitParams(ntc=ntc, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid parameter set: {exc}") from exc


def save_params(p: CircuitParams, path) -> None:
    """Write a fully populated flat key-value parameter file."""
    lines = ["# thermoregulator circuit parameters"]
    for name in _SCALAR_KEYS:
        lines.append(f"{name} = {getattr(p, name)!r}")
    lines.append(f"ntc_r25 = {p.ntc.r_25!r}")
    lines.append(f"ntc_b = {p.ntc.b!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
