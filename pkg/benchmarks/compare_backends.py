"""Timing comparison of the compiled and pure-Python solver backends.

Runs the two hybrid thermoregulator models on a short constant-ambient
scenario with each backend and prints wall times, jump counts and the
terminal-state agreement.  Usage:

    python benchmarks/compare_backends.py [duration_seconds]
"""

from __future__ import annotations

import sys
import time

import numpy as np

import neurotherm as nt


def run(model: str, backend: str, duration: float):
    p = nt.CircuitParams()
    ambient = nt.AmbientProfile.constant(30.0)
    config = nt.SolverConfig(t_end=duration, max_step=1e-2, record_interval=0.01)
    simulate = nt.simulate_model_a if model == "a" else nt.simulate_model_b
    start = time.perf_counter()
    arc = simulate(p, ambient, config, backend=backend)
    wall = time.perf_counter() - start
    return wall, arc


def main() -> int:
    duration = float(sys.argv[1]) if len(sys.argv) > 1 else 5.0
    if not nt.HAVE_COMPILED:
        print("compiled backend not available; nothing to compare")
        return 1
    print(f"scenario: constant ambient 30 degC, {duration:g} s simulated time")
    print(f"{'model':>6} {'backend':>9} {'wall [s]':>10} {'jumps':>8} {'final T':>12}")
    for model in ("b", "a"):
        finals = {}
        walls = {}
        for backend in ("compiled", "python"):
            wall, arc = run(model, backend, duration)
            finals[backend] = arc.final_state[0]
            walls[backend] = wall
            print(
                f"{model.upper():>6} {backend:>9} {wall:>10.3f} "
                f"{arc.jump_count:>8} {arc.final_state[0]:>12.6f}"
            )
        diff = abs(finals["compiled"] - finals["python"])
        speedup = walls["python"] / walls["compiled"]
        print(f"{'':>6} speedup {speedup:.1f}x, final-T difference {diff:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
