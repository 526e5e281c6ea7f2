"""Neuromorphic thermoregulator simulation library.

Two hybrid models of a spiking temperature regulator (full-spike and
instantaneous-pulse), a generic event-locating hybrid solver, the
averaged-model analysis used to tune the feedforward gain, and an
experiment CLI.
"""

from .circuit import CircuitParams, NtcParams, load_params, save_params
from .hybrid import HybridArc, HybridSystem, JumpCondition, SolverConfig, solve
from .models import AmbientProfile, build_model_a, build_model_b
from .backend import HAVE_COMPILED, active_backend, simulate_model_a, simulate_model_b
from .averaged import AveragedModel, calibrate_ntc, fit_averaged_model

__version__ = "0.1.0"

__all__ = [
    "AmbientProfile",
    "AveragedModel",
    "CircuitParams",
    "HAVE_COMPILED",
    "HybridArc",
    "HybridSystem",
    "JumpCondition",
    "NtcParams",
    "SolverConfig",
    "active_backend",
    "build_model_a",
    "build_model_b",
    "calibrate_ntc",
    "fit_averaged_model",
    "load_params",
    "save_params",
    "simulate_model_a",
    "simulate_model_b",
    "solve",
    "__version__",
]
