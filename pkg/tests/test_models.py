"""Model construction, jump maps, and spike-train bookkeeping."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from neurotherm import circuit, models
from neurotherm.circuit import CircuitParams
from neurotherm.errors import WindowTooShort
from neurotherm.hybrid import SolverConfig
from neurotherm.models import (
    AmbientProfile,
    IDX_T,
    IDX_V1,
    IDX_VFB,
    IDX_VFF,
    build_model_b,
    default_initial_state,
    jump_ratio,
    mean_spike_rates,
    spike_constants,
    spike_duration,
    spike_frequencies,
    spike_times,
)
from neurotherm.backend import simulate_model_b


@pytest.fixture
def p():
    return CircuitParams()


class TestSpikeConstants:
    def test_discharge_time_against_integration(self, p):
        """tau must match brute-force integration of the RC discharge."""

        def hits_v_off(t, y):
            return y[0] - p.v_off

        hits_v_off.terminal = True
        hits_v_off.direction = -1
        sol = solve_ivp(
            lambda t, y: [-y[0] / (p.r5 * p.c1)],
            (0.0, 1.0),
            [p.v_on],
            events=hits_v_off,
            rtol=1e-12,
            atol=1e-14,
        )
        tau_numeric = sol.t_events[0][0]
        assert spike_duration(p, p.c1) == pytest.approx(tau_numeric, rel=1e-6)

    def test_jump_ratio_against_co_integration(self, p):
        """The per-spike buffer decay a must match co-integrating the
        buffer leak over one spike duration."""
        tau = spike_duration(p, p.c1)
        sol = solve_ivp(
            lambda t, y: [-y[0] / (p.r4 * p.c_fb)],
            (0.0, tau),
            [1.0],
            rtol=1e-12,
            atol=1e-14,
        )
        assert jump_ratio(tau, p, p.c_fb) == pytest.approx(
            sol.y[0, -1], rel=1e-6
        )

    def test_frozen_values(self, p):
        sc = spike_constants(p, p.c1, p.c_fb)
        assert sc.tau == pytest.approx(9.406956e-5, rel=1e-6)
        assert sc.a == pytest.approx(0.9801841664716816, rel=1e-12)

    def test_validation(self, p):
        with pytest.raises(ValueError):
            models.SpikeConstants(tau=-1.0, a=0.5)
        with pytest.raises(ValueError):
            models.SpikeConstants(tau=1.0, a=1.5)
        with pytest.raises(ValueError):
            jump_ratio(0.0, p, p.c_fb)


class TestModelBJumps:
    def warm_cold_conditions(self, p):
        system = build_model_b(p, AmbientProfile.constant(30.0))
        return system.jump_conditions

    def test_warm_spike_pulls_buffer_up(self, p):
        a = spike_constants(p, p.c1, p.c_fb).a
        cond = self.warm_cold_conditions(p)[0]
        x = default_initial_state(p, "b")
        x[IDX_VFB] = 1.0
        y = cond.transform(x)
        assert y[IDX_VFB] == pytest.approx(a + (1.0 - a) * p.v_a, rel=1e-12)
        assert y[IDX_VFB] == pytest.approx(1.01982, abs=1e-5)

    def test_cold_spike_pulls_buffer_down(self, p):
        a = spike_constants(p, p.c2, p.c_fb).a
        cond = self.warm_cold_conditions(p)[1]
        x = default_initial_state(p, "b")
        x[IDX_VFB] = 1.0
        y = cond.transform(x)
        assert y[IDX_VFB] == pytest.approx(a, rel=1e-12)
        assert y[IDX_VFB] == pytest.approx(0.98018, abs=1e-5)

    def test_membrane_resets_exactly(self, p):
        for i, cond in enumerate(self.warm_cold_conditions(p)):
            x = default_initial_state(p, "b")
            x[IDX_V1 + i] = p.v_on
            assert cond.transform(x)[IDX_V1 + i] == p.v_off

    def test_buffer_isolation(self, p):
        """Core neurons touch only V_fb, ambient neurons only V_ff."""
        conds = self.warm_cold_conditions(p)
        x = default_initial_state(p, "b")
        x[IDX_VFB] = 0.7
        x[IDX_VFF] = 1.3
        for i in (0, 1):
            y = conds[i].transform(x)
            assert y[IDX_VFF] == x[IDX_VFF]
            assert y[IDX_VFB] != x[IDX_VFB]
        for i in (2, 3):
            y = conds[i].transform(x)
            assert y[IDX_VFB] == x[IDX_VFB]
            assert y[IDX_VFF] != x[IDX_VFF]

    def test_jump_map_fixed_points(self, p):
        """Repeated warm spikes converge to V_a; cold spikes to 0."""
        a = spike_constants(p, p.c1, p.c_fb).a
        conds = self.warm_cold_conditions(p)
        x = default_initial_state(p, "b")
        x[IDX_VFB] = 1.0
        for _ in range(5000):
            x[IDX_V1] = p.v_on
            x = conds[0].transform(x)
        assert x[IDX_VFB] == pytest.approx(p.v_a, abs=1e-6)
        for _ in range(5000):
            x[IDX_V1 + 1] = p.v_on
            x = conds[1].transform(x)
        assert x[IDX_VFB] == pytest.approx(0.0, abs=1e-6)


class TestFrozenPlantRuns:
    def run(self, p, temperature, duration=1.0):
        ambient = AmbientProfile.constant(temperature)
        x0 = default_initial_state(p, "b", temperature=temperature)
        return simulate_model_b(
            p,
            ambient,
            SolverConfig(t_end=duration, max_step=1e-2),
            initial_state=x0,
            freeze_plant=True,
            backend="python",
        )

    def test_spike_counts_match_charge_time_oracle(self, p):
        """With the plant frozen the gate voltages are constant, so each
        neuron fires strictly periodically; the spike count over 1 s is
        known in closed form from the charge time."""
        temperature = 30.0
        arc = self.run(p, temperature)
        caps = models.neuron_capacitances(p)
        gates = models._gate_voltages(p, temperature, temperature)
        x0 = default_initial_state(p, "b", temperature=temperature)
        per_neuron = spike_times(arc, "b")
        for i in range(4):
            current = circuit.i_fet(gates[i], p)
            period = caps[i] * (p.v_on - p.v_off) / current
            t_first = caps[i] * (p.v_on - x0[IDX_V1 + i]) / current
            expected = 1 + math.floor((1.0 - t_first) / period)
            assert len(per_neuron[i]) == expected
            # spikes are evenly spaced at the closed-form period
            assert np.allclose(np.diff(per_neuron[i]), period, rtol=1e-6)

    def test_rates_monotone_in_temperature(self, p):
        cool = self.run(p, 32.0)
        warm = self.run(p, 46.0)
        r_cool = mean_spike_rates(cool, "b", 0.0, 1.0)
        r_warm = mean_spike_rates(warm, "b", 0.0, 1.0)
        # warmth channels speed up, cold channels slow down
        assert r_warm[0] > r_cool[0]
        assert r_warm[2] > r_cool[2]
        assert r_warm[1] < r_cool[1]
        assert r_warm[3] < r_cool[3]

    def test_plant_state_untouched(self, p):
        arc = self.run(p, 37.0, duration=0.5)
        assert np.all(arc.states[:, IDX_T] == 37.0)

    def test_buffers_stay_in_range(self, p):
        arc = self.run(p, 30.0)
        for idx in (IDX_VFB, IDX_VFF):
            assert arc.states[:, idx].min() >= 0.0
            assert arc.states[:, idx].max() <= p.v_a


class TestSpikeStatistics:
    def test_window_too_short(self, p):
        arc = TestFrozenPlantRuns().run(p, 30.0, duration=0.2)
        with pytest.raises(WindowTooShort):
            spike_frequencies(arc, 0.0005, "b")
        with pytest.raises(WindowTooShort):
            spike_frequencies(arc, -1.0, "b")

    def test_frequencies_match_mean_rates(self, p):
        arc = TestFrozenPlantRuns().run(p, 30.0)
        times, rates = spike_frequencies(arc, 1.0, "b", times=[1.0])
        mean = mean_spike_rates(arc, "b", 0.0, 1.0)
        # the 1 s window at t = 1 covers the whole run
        assert np.allclose(rates[:, 0], mean, atol=1.0)

    def test_unknown_model_rejected(self, p):
        arc = TestFrozenPlantRuns().run(p, 30.0, duration=0.2)
        with pytest.raises(ValueError):
            spike_times(arc, "c")


class TestAmbientProfile:
    def test_constant(self):
        profile = AmbientProfile.constant(42.0)
        assert profile.is_constant
        assert profile(0.0) == 42.0
        assert profile(100.0) == 42.0

    def test_ramp_endpoints_and_clamp(self):
        profile = AmbientProfile.ramp(0.0, 80.0, 800.0)
        assert not profile.is_constant
        assert profile(0.0) == 0.0
        assert profile(400.0) == pytest.approx(40.0)
        assert profile(800.0) == 80.0
        assert profile(-5.0) == 0.0  # clamped before the start
        assert profile(900.0) == 80.0  # clamped after the end

    def test_initial_state_shapes(self, p):
        assert default_initial_state(p, "b").shape == (8,)
        assert default_initial_state(p, "a").shape == (16,)
        assert default_initial_state(p, "b", with_clock=True).shape == (9,)
        with pytest.raises(ValueError):
            default_initial_state(p, "x")

    def test_staggered_membranes_distinct(self, p):
        x = default_initial_state(p, "b")
        v = x[IDX_V1:IDX_V1 + 4]
        assert len(set(v)) == 4
        assert np.all(v > p.v_off)
