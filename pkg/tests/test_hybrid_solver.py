"""Generic hybrid solver tests: event location, priorities, guards."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from neurotherm.errors import BracketInvalid, NoProgress
from neurotherm.hybrid import (
    HybridArc,
    HybridSystem,
    JumpCondition,
    SolverConfig,
    solve,
)
from neurotherm.hybrid.solver import locate_event


def sawtooth_system():
    """Unit-rate ramp resetting from 1 to 0: jumps at every integer t."""
    cond = JumpCondition(
        guard=lambda x: x[0] - 1.0,
        transform=lambda x: np.array([0.0]),
        label="reset",
    )
    return HybridSystem(
        state_dimension=1,
        flow_map=lambda x: np.array([1.0]),
        flow_guards=(cond.guard,),
        jump_conditions=(cond,),
        name="sawtooth",
    )


class TestPureFlow:
    def test_no_jump_integration(self):
        system = HybridSystem(
            state_dimension=1,
            flow_map=lambda x: np.array([-x[0]]),
            flow_guards=(),
            jump_conditions=(),
            name="decay",
        )
        arc = solve(system, [1.0], SolverConfig(t_end=2.0))
        assert arc.jump_count == 0
        assert arc.final_state[0] == pytest.approx(np.exp(-2.0), rel=1e-6)
        assert arc.t[-1] == pytest.approx(2.0)

    def test_max_step_respected(self):
        system = HybridSystem(
            state_dimension=1,
            flow_map=lambda x: np.array([1.0]),
            flow_guards=(),
            jump_conditions=(),
            name="ramp",
        )
        config = SolverConfig(t_end=1.0, max_step=0.05, record_interval=0.0)
        arc = solve(system, [0.0], config)
        assert np.diff(arc.t).max() <= 0.05 * (1.0 + 1e-9)


class TestSawtooth:
    def test_jump_times_at_integers(self):
        arc = solve(sawtooth_system(), [0.0], SolverConfig(t_end=5.5))
        assert arc.jump_count == 5
        assert np.allclose(arc.jump_t, [1, 2, 3, 4, 5], atol=1e-9)
        assert np.all(arc.jump_post[:, 0] == 0.0)
        assert np.all(np.abs(arc.jump_pre[:, 0] - 1.0) <= 1e-9)
        assert arc.final_state[0] == pytest.approx(0.5, abs=1e-6)

    def test_jump_counter_matches_records(self):
        arc = solve(sawtooth_system(), [0.0], SolverConfig(t_end=3.5))
        assert arc.jump_count == len(arc.jump_t)
        assert arc.j[-1] == arc.jump_count
        # j increments by exactly one at each recorded jump
        assert np.all(np.diff(arc.j) >= 0)
        assert np.all(np.diff(arc.j) <= 1)

    def test_no_sample_strictly_inside_jump_set(self):
        config = SolverConfig(t_end=4.0)
        arc = solve(sawtooth_system(), [0.0], config)
        assert np.all(arc.states[:, 0] <= 1.0 + config.event_tolerance)

    def test_j_max_termination(self):
        arc = solve(sawtooth_system(), [0.0], SolverConfig(t_end=100.0, j_max=3))
        assert arc.jump_count == 3
        assert arc.t[-1] == pytest.approx(3.0, abs=1e-6)

    def test_determinism(self):
        a1 = solve(sawtooth_system(), [0.0], SolverConfig(t_end=5.0))
        a2 = solve(sawtooth_system(), [0.0], SolverConfig(t_end=5.0))
        assert np.array_equal(a1.t, a2.t)
        assert np.array_equal(a1.states, a2.states)
        assert np.array_equal(a1.jump_t, a2.jump_t)


class TestReplay:
    def test_flow_segments_match_independent_integration(self):
        """Between consecutive jumps the arc must follow the flow ODE."""
        arc = solve(sawtooth_system(), [0.25], SolverConfig(t_end=3.0))
        boundaries = [0.0] + list(arc.jump_t) + [arc.t[-1]]
        start_state = 0.25
        for lo, hi in zip(boundaries[:-1], boundaries[1:]):
            if hi - lo < 1e-9:
                continue
            sol = solve_ivp(
                lambda t, y: [1.0], (lo, hi), [start_state],
                rtol=1e-10, atol=1e-12, dense_output=True,
            )
            mask = (arc.t >= lo + 1e-12) & (arc.t <= hi - 1e-12)
            if mask.any():
                expected = sol.sol(arc.t[mask])[0]
                assert np.allclose(arc.states[mask, 0], expected, atol=1e-7)
            start_state = 0.0  # post-jump value


class TestEventLocation:
    def test_linear_guard(self):
        interp = lambda t: np.array([t])
        t_star, x_star = locate_event(
            lambda x: x[0] - 0.3, interp, 0.0, 1.0, 1e-12
        )
        assert t_star == pytest.approx(0.3, abs=1e-10)
        assert x_star[0] == pytest.approx(0.3, abs=1e-10)

    def test_endpoint_within_tolerance(self):
        interp = lambda t: np.array([t])
        t_star, _ = locate_event(lambda x: x[0], interp, 0.0, 1.0, 1e-9)
        assert t_star == 0.0

    def test_invalid_bracket(self):
        interp = lambda t: np.array([t])
        with pytest.raises(BracketInvalid):
            locate_event(lambda x: x[0] + 1.0, interp, 0.0, 1.0, 1e-12)


class TestPriorities:
    def make_overlap_system(self):
        """State starts inside the jump set while the flow set is
        everywhere (empty flow-guard tuple)."""
        cond = JumpCondition(
            guard=lambda x: x[0] - 1.0,
            transform=lambda x: np.array([0.0]),
            label="down",
        )
        return HybridSystem(
            state_dimension=1,
            flow_map=lambda x: np.array([0.0]),
            flow_guards=(),
            jump_conditions=(cond,),
            name="overlap",
        )

    def test_jump_first_fires_immediately(self):
        arc = solve(
            self.make_overlap_system(), [1.5],
            SolverConfig(t_end=0.5, priority="jump-first"),
        )
        assert arc.jump_count == 1
        assert arc.jump_t[0] == 0.0

    def test_flow_first_keeps_flowing(self):
        arc = solve(
            self.make_overlap_system(), [1.5],
            SolverConfig(t_end=0.5, priority="flow-first"),
        )
        assert arc.jump_count == 0
        assert arc.final_state[0] == pytest.approx(1.5)


class TestDegenerateBehavior:
    def test_zeno_accumulation_detected(self):
        """A self-re-enabling jump with zero time advance must stop."""
        cond = JumpCondition(
            guard=lambda x: x[0] - 1.0,
            transform=lambda x: np.array([2.0]),  # still in the jump set
            label="stuck",
        )
        system = HybridSystem(
            state_dimension=1,
            flow_map=lambda x: np.array([0.0]),
            flow_guards=(cond.guard,),
            jump_conditions=(cond,),
            name="zeno",
        )
        with pytest.raises(NoProgress, match="Zeno"):
            solve(system, [1.5], SolverConfig(t_end=1.0))

    def test_outside_both_sets(self):
        system = HybridSystem(
            state_dimension=1,
            flow_map=lambda x: np.array([0.0]),
            flow_guards=(lambda x: x[0] - 1.0,),  # flow only below 1
            jump_conditions=(),
            name="dead-end",
        )
        with pytest.raises(NoProgress):
            solve(system, [1.5], SolverConfig(t_end=1.0))


class TestArcStructure:
    def test_jump_records_consistent(self):
        arc = solve(sawtooth_system(), [0.0], SolverConfig(t_end=3.5))
        assert len(arc.jump_t) == len(arc.jump_j) == len(arc.jump_condition)
        assert arc.jump_pre.shape == arc.jump_post.shape
        assert np.all(np.diff(arc.jump_j) == 1)
        assert arc.condition_labels == ("reset",)
        arc.validate()

    def test_record_interval_decimation(self):
        dense = solve(
            sawtooth_system(), [0.0],
            SolverConfig(t_end=3.0, record_interval=0.0),
        )
        sparse = solve(
            sawtooth_system(), [0.0],
            SolverConfig(t_end=3.0, record_interval=0.25),
        )
        assert len(sparse.t) < len(dense.t)
        assert sparse.jump_count == dense.jump_count
