"""Component equation and parameter-file tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurotherm import circuit
from neurotherm.circuit import (
    CircuitParams,
    NtcParams,
    gate_equality_root,
    gate_voltage_cold,
    gate_voltage_warm,
    load_params,
    ntc_resistance,
    pack_params,
    parse_flat_file,
    save_params,
    PARAM_FIELDS,
)
from neurotherm.errors import ConfigError, SaturationViolated


@pytest.fixture
def p():
    return CircuitParams()


class TestNtc:
    def test_reference_point(self, p):
        assert ntc_resistance(25.0, p.ntc) == pytest.approx(p.ntc.r_25, rel=1e-12)

    def test_strictly_decreasing(self, p):
        grid = np.linspace(-20.0, 120.0, 281)
        r = [ntc_resistance(t, p.ntc) for t in grid]
        assert all(b < a for a, b in zip(r, r[1:]))

    @given(st.floats(min_value=-50.0, max_value=150.0),
           st.floats(min_value=-50.0, max_value=150.0))
    @settings(max_examples=50, deadline=None)
    def test_order_preserved(self, t1, t2):
        ntc = NtcParams()
        if t1 + 1e-6 < t2:
            assert ntc_resistance(t1, ntc) > ntc_resistance(t2, ntc)

    def test_below_absolute_zero(self, p):
        with pytest.raises(ValueError):
            ntc_resistance(-300.0, p.ntc)

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            NtcParams(r_25=-1.0)
        with pytest.raises(ConfigError):
            NtcParams(b=0.0)


class TestGateDividers:
    def test_warm_limits(self, p):
        # closed-form divider limits for r_ntc -> 0 and r_ntc -> infinity
        lo = p.v_cc / (1.0 + 0.5 * p.r1 * (1.0 / p.r3 + 1.0 / p.r2))
        hi = p.v_cc / (1.0 + 0.5 * p.r1 / p.r3)
        cold_part = NtcParams(r_25=1e-3, b=4000.0)
        hot_part = NtcParams(r_25=1e12, b=4000.0)
        assert gate_voltage_warm(25.0, p.with_ntc(cold_part)) == pytest.approx(
            lo, rel=1e-6
        )
        assert gate_voltage_warm(25.0, p.with_ntc(hot_part)) == pytest.approx(
            hi, rel=1e-6
        )
        assert lo == pytest.approx(8.0874, abs=1e-4)
        assert hi == pytest.approx(9.6016, abs=1e-4)

    def test_cold_limits(self, p):
        lo = p.v_cc * p.r9 / (p.r9 + p.r2 + p.r7)
        cold_part = NtcParams(r_25=1e12, b=4000.0)
        assert gate_voltage_cold(25.0, p.with_ntc(cold_part)) == pytest.approx(
            lo, rel=1e-6
        )
        assert lo == pytest.approx(8.4602, abs=1e-4)
        hot_part = NtcParams(r_25=1e-3, b=4000.0)
        assert gate_voltage_cold(25.0, p.with_ntc(hot_part)) == pytest.approx(
            p.v_cc, rel=1e-4
        )

    def test_monotone_in_temperature(self, p):
        grid = np.linspace(0.0, 100.0, 401)
        warm = [gate_voltage_warm(t, p) for t in grid]
        cold = [gate_voltage_cold(t, p) for t in grid]
        assert all(b < a for a, b in zip(warm, warm[1:]))
        assert all(b > a for a, b in zip(cold, cold[1:]))

    def test_equality_root(self, p):
        root = gate_equality_root(p)
        assert root == pytest.approx(39.83484, abs=1e-4)
        assert gate_voltage_warm(root, p) == pytest.approx(
            gate_voltage_cold(root, p), abs=1e-8
        )

    def test_no_crossing_rejected(self, p):
        bad = p.with_ntc(NtcParams(r_25=10e3, b=3977.0))
        with pytest.raises(ConfigError):
            gate_equality_root(bad)


class TestFetAndNeuron:
    def test_quadratic_law(self, p):
        assert circuit.i_fet(8.3, p) == pytest.approx(2.88e-5, rel=1e-12)

    def test_saturation_boundary(self, p):
        with pytest.raises(SaturationViolated):
            circuit.i_fet(p.v_s + p.v_th_fet + 1e-9, p)
        with pytest.raises(SaturationViolated):
            circuit.i_fet(11.0, p)

    def test_current_increases_with_lower_gate(self, p):
        gates = np.linspace(8.0, 10.0, 50)
        currents = [circuit.i_fet(v, p) for v in gates]
        assert all(b < a for a, b in zip(currents, currents[1:]))

    def test_charge_time(self, p):
        expected = p.c1 * (p.v_on - p.v_off) / 2.88e-5
        assert circuit.charge_time(8.3, p, p.c1) == pytest.approx(
            expected, rel=1e-12
        )

    def test_rate_example(self, p):
        tau = p.c1 * p.r5 * math.log(p.v_on / p.v_off)
        expected = 1.0 / (circuit.charge_time(8.3, p, p.c1) + tau)
        rate = circuit.neuron_rate(8.3, p, p.c1)
        assert rate == pytest.approx(expected, rel=1e-12)
        assert rate == pytest.approx(94.89, abs=0.01)


class TestDerivedGains:
    def test_actuation_chain_gain(self, p):
        assert p.amplifier_gain == pytest.approx(11.0)
        assert p.lowpass_dc_gain == pytest.approx(10.0 / 11.0)
        assert p.b_gain == pytest.approx(20.0, rel=1e-12)

    def test_control_combination(self):
        assert circuit.combine_control(0.3, -0.1, 2.0) == pytest.approx(0.1)
        p = CircuitParams(k_ff=0.5)
        u = circuit.control_signal(1.2, 0.8, p)
        assert u == pytest.approx(0.2 + 0.5 * (-0.2))


class TestValidation:
    def test_negative_component(self):
        with pytest.raises(ConfigError):
            CircuitParams(r1=-1.0)
        with pytest.raises(ConfigError):
            CircuitParams(c_lp=0.0)

    def test_threshold_ordering(self):
        with pytest.raises(ConfigError):
            CircuitParams(v_on=0.5)  # below v_th_switch
        with pytest.raises(ConfigError):
            CircuitParams(v_th_switch=0.1)  # below v_off
        with pytest.raises(ConfigError):
            CircuitParams(v_on=12.0)  # above v_cc

    def test_feedforward_gain_sign(self):
        with pytest.raises(ConfigError):
            CircuitParams(k_ff=-0.1)


class TestParamFiles:
    def test_round_trip(self, tmp_path):
        p = CircuitParams(alpha=3.0, k_ff=1.25,
                          ntc=NtcParams(r_25=220e3, b=4100.0))
        path = tmp_path / "params.txt"
        save_params(p, path)
        assert load_params(path) == p

    def test_partial_file_keeps_defaults(self, tmp_path):
        path = tmp_path / "partial.txt"
        path.write_text("alpha = 4.0\nntc_b = 3500\n", encoding="utf-8")
        p = load_params(path)
        assert p.alpha == 4.0
        assert p.ntc.b == 3500.0
        assert p.r1 == CircuitParams().r1

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("# header\n\nalpha = 2.5  # inline\n", encoding="utf-8")
        assert load_params(path).alpha == 2.5

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("resistance_42 = 1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="unknown parameter"):
            load_params(path)

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("alpha = 1\nalpha = 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_flat_file(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("alpha 2.0\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="m.txt:1"):
            parse_flat_file(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "n.txt"
        path.write_text("alpha = fast\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="not a number"):
            load_params(path)

    def test_invalid_combination_reported(self, tmp_path):
        path = tmp_path / "i.txt"
        path.write_text("v_on = 0.2\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_params(path)


class TestPackedVector:
    def test_field_order_and_values(self, p):
        packed = pack_params(p)
        assert packed.shape == (len(PARAM_FIELDS),)
        assert packed[PARAM_FIELDS.index("r1")] == p.r1
        assert packed[PARAM_FIELDS.index("ntc_r25")] == p.ntc.r_25
        assert packed[PARAM_FIELDS.index("ntc_b")] == p.ntc.b
        assert packed[PARAM_FIELDS.index("k_ff")] == p.k_ff
