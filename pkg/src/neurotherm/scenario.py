"""Scenario and solver-settings files for the experiment commands.

Both use the same flat ``key = value`` format as the circuit parameter
files; unknown keys are rejected so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .circuit import parse_flat_file
from .errors import ConfigError
from .hybrid import SolverConfig
from .models import AmbientProfile

MODELS = ("a", "b", "averaged")


@dataclass(frozen=True)
class Scenario:
    """One experiment run: which model, how long, in what ambient."""

    model: str = "b"
    duration: float = 20.0
    ambient: AmbientProfile = AmbientProfile.constant(40.0)
    feedforward_k: Optional[float] = 0.0  # None means "auto" (fitted K*)
    initial_temperature: float = 30.0
    output_decimation: float = 100.0
    # sweep-specific settings (used by the sweep-u command)
    sweep_t_min: float = 0.0
    sweep_t_max: float = 80.0
    sweep_step: float = 1.0
    sweep_hold: float = 20.0
    window_lo: float = 30.0
    window_hi: float = 50.0
    target_t_set: float = 39.84

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected a, b or averaged")
        if self.duration <= 0:
            raise ConfigError("scenario duration must be positive")
        if self.output_decimation < 0:
            raise ConfigError("output_decimation must be >= 0")
        if self.feedforward_k is not None and self.feedforward_k < 0:
            raise ConfigError("feedforward_k must be non-negative or auto")
        if not self.sweep_t_min < self.sweep_t_max:
            raise ConfigError("sweep range requires t_min < t_max")
        if self.sweep_step <= 0 or self.sweep_step > self.sweep_t_max - self.sweep_t_min:
            raise ConfigError("sweep step must be positive and within the range")
        if self.sweep_hold <= 0:
            raise ConfigError("sweep hold must be positive")
        if not self.window_lo < self.window_hi:
            raise ConfigError("slope window requires window_lo < window_hi")


_FLOAT_KEYS = {
    "duration", "initial_temperature", "output_decimation",
    "ambient_temperature", "ramp_start", "ramp_end",
    "sweep_t_min", "sweep_t_max", "sweep_step", "sweep_hold",
    "window_lo", "window_hi", "target_t_set",
}


def load_scenario(path) -> Scenario:
    entries = parse_flat_file(path)
    kwargs = {}
    ambient_kind = entries.pop("ambient", "constant").strip().lower()
    floats = {}
    for key, value in list(entries.items()):
        if key == "model":
            kwargs["model"] = value.strip().lower()
        elif key == "feedforward_k":
            v = value.strip().lower()
            if v == "auto":
                kwargs["feedforward_k"] = None
            else:
                kwargs["feedforward_k"] = _to_float(key, value, path)
        elif key in _FLOAT_KEYS:
            floats[key] = _to_float(key, value, path)
        else:
            raise ConfigError(f"{path}: unknown scenario key '{key}'")
    duration = floats.pop("duration", Scenario.duration)
    if ambient_kind == "constant":
        for key in ("ramp_start", "ramp_end"):
            if key in floats:
                _reject(path, key)
        temperature = floats.pop("ambient_temperature", 40.0)
        ambient = AmbientProfile.constant(temperature)
    elif ambient_kind == "ramp":
        if "ambient_temperature" in floats:
            _reject(path, "ambient_temperature")
        start = floats.pop("ramp_start", 0.0)
        end = floats.pop("ramp_end", 80.0)
        ambient = AmbientProfile.ramp(start, end, duration)
    else:
        raise ConfigError(
            f"{path}: ambient must be 'constant' or 'ramp', got {ambient_kind!r}"
        )
    kwargs.update(floats)
    return Scenario(duration=duration, ambient=ambient, **kwargs)


def _reject(path, key):
    raise ConfigError(f"{path}: key '{key}' does not apply to this ambient kind")


def _to_float(key, value, path) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{path}: field '{key}': not a number: {value!r}") from exc


_SOLVER_FLOAT_KEYS = {
    "max_step": "max_step",
    "event_tolerance": "event_tolerance",
    "rel_tol": "integrator_rel_tol",
    "abs_tol": "integrator_abs_tol",
    "zeno_min_progress": "zeno_min_progress",
}
_SOLVER_INT_KEYS = {"j_max": "j_max", "zeno_jump_limit": "zeno_jump_limit"}


def load_solver_settings(path) -> dict:
    """Solver overrides as SolverConfig field values (t_end stays with the
    scenario).  Also accepts a 'backend' selector."""
    entries = parse_flat_file(path)
    overrides = {}
    backend = None
    for key, value in entries.items():
        if key in _SOLVER_FLOAT_KEYS:
            overrides[_SOLVER_FLOAT_KEYS[key]] = _to_float(key, value, path)
        elif key in _SOLVER_INT_KEYS:
            try:
                overrides[_SOLVER_INT_KEYS[key]] = int(value)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: field '{key}': not an integer: {value!r}"
                ) from exc
        elif key == "priority":
            if value not in ("jump-first", "flow-first"):
                raise ConfigError(
                    f"{path}: priority must be jump-first or flow-first"
                )
            overrides["priority"] = value
        elif key == "backend":
            if value not in ("compiled", "python"):
                raise ConfigError(f"{path}: backend must be compiled or python")
            backend = value
        else:
            raise ConfigError(f"{path}: unknown solver key '{key}'")
    return {"overrides": overrides, "backend": backend}


def solver_config_for(
    scenario: Scenario,
    overrides: Optional[dict] = None,
    max_step: float = 1e-2,
) -> SolverConfig:
    config = SolverConfig(t_end=scenario.duration, max_step=max_step)
    if overrides:
        config = replace(config, **overrides)
    return config
