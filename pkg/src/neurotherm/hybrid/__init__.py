from .system import HybridArc, HybridSystem, JumpCondition, SolverConfig
from .solver import locate_event, solve

__all__ = [
    "HybridArc",
    "HybridSystem",
    "JumpCondition",
    "SolverConfig",
    "locate_event",
    "solve",
]
