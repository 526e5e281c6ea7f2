"""Trajectory CSV, run-report and float serialization helpers.

Floats are written with 17 significant digits so a parsed file reproduces
the in-memory doubles exactly.  All text artifacts are UTF-8 with LF line
endings regardless of platform.
"""

from __future__ import annotations

import csv

import numpy as np

from . import circuit, models
from .circuit import CircuitParams
from .hybrid import HybridArc
from .models import AmbientProfile

FREQUENCY_WINDOW = 1.0  # seconds, for the f1..f4 trajectory columns

TRAJECTORY_COLUMNS = (
    "t", "j", "T", "V1", "V2", "V3", "V4", "V_fb", "V_ff", "V_LP",
    "u_fb", "u_ff", "u", "V_out", "T_amb", "f1", "f2", "f3", "f4",
)


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def write_csv(path, header, rows) -> None:
    """Write rows of floats (ints allowed) as a comma-separated file."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    str(v) if isinstance(v, (int, np.integer)) else format_float(v)
                    for v in row
                ]
            )


def read_csv(path):
    """Read back a CSV written by write_csv: (header, float array)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return header, np.asarray(data)


def decimate_indices(t: np.ndarray, samples_per_second: float) -> np.ndarray:
    """Indices of a time series decimated to about the requested density.

    The first and last samples are always kept; in between, a sample is
    kept whenever it advances past the next output instant.
    """
    if samples_per_second <= 0:
        return np.arange(len(t))
    keep = [0]
    step = 1.0 / samples_per_second
    next_t = t[0] + step
    for i in range(1, len(t)):
        if t[i] >= next_t:
            keep.append(i)
            next_t += step * max(1, int((t[i] - next_t) / step) + 1)
    if keep[-1] != len(t) - 1:
        keep.append(len(t) - 1)
    return np.asarray(keep, dtype=np.intp)


def trajectory_table(
    arc: HybridArc,
    p: CircuitParams,
    ambient: AmbientProfile,
    model: str,
    samples_per_second: float = 100.0,
) -> np.ndarray:
    """Decimated trajectory samples with derived signal columns."""
    idx = decimate_indices(arc.t, samples_per_second)
    t = arc.t[idx]
    j = arc.j[idx]
    x = arc.states[idx]
    u_fb = x[:, models.IDX_VFB] - p.half_v_a
    u_ff = x[:, models.IDX_VFF] - p.half_v_a
    u = u_fb + p.k_ff * u_ff
    v_out = p.amplifier_gain * x[:, models.IDX_VLP]
    t_amb = np.array([ambient(ti) for ti in t])
    _, rates = models.spike_frequencies(arc, FREQUENCY_WINDOW, model, times=t)
    table = np.column_stack(
        [
            t, j,
            x[:, models.IDX_T],
            x[:, models.IDX_V1], x[:, models.IDX_V2],
            x[:, models.IDX_V3], x[:, models.IDX_V4],
            x[:, models.IDX_VFB], x[:, models.IDX_VFF], x[:, models.IDX_VLP],
            u_fb, u_ff, u, v_out, t_amb,
            rates[0], rates[1], rates[2], rates[3],
        ]
    )
    return table


def write_trajectory(path, table: np.ndarray) -> None:
    rows = []
    for row in table:
        out = list(row)
        out[1] = int(row[1])  # jump counter is integral
        rows.append(out)
    write_csv(path, TRAJECTORY_COLUMNS, rows)


def jump_count_summary(arc: HybridArc) -> dict:
    return {label: int(n) for label, n in arc.jump_counts_by_label().items()}


def write_report(path, entries: dict) -> None:
    """Write a flat key = value run report."""
    lines = []
    for key, value in entries.items():
        if isinstance(value, float):
            value = format_float(value)
        lines.append(f"{key} = {value}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run_report(
    arc: HybridArc,
    wall_time: float,
    outputs,
    extra: dict | None = None,
) -> dict:
    report = {
        "wall_time": wall_time,
        "jump_count_total": arc.jump_count,
        "flow_time": float(arc.t[-1]),
    }
    for label, count in jump_count_summary(arc).items():
        report[f"jumps_{label}"] = count
    for i, value in enumerate(arc.final_state):
        report[f"final_state_{i}"] = float(value)
    for name in outputs:
        report[f"output_{len([k for k in report if k.startswith('output_')])}"] = str(name)
    if extra:
        report.update(extra)
    return report
