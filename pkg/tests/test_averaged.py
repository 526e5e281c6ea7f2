"""Averaged-model fitting, equilibrium formulas, and NTC calibration."""

import numpy as np
import pytest

from neurotherm.averaged import (
    AveragedModel,
    buffer_leakage_rate,
    calibrate_ntc,
    equilibrium_error_formula,
    feedforward_gain,
    find_t_set,
    fit_slope_c,
    steady_state_error,
)
from neurotherm.circuit import CircuitParams, gate_equality_root
from neurotherm.errors import (
    ConfigError,
    InsufficientSamples,
    MultipleCrossings,
    NoCrossing,
)


def linear_model(c=0.3, alpha=2.0, t_set=40.0, b_gain=20.0):
    """Synthetic averaged model with an exactly linear u~ curve."""
    t = np.linspace(t_set - 20.0, t_set + 20.0, 81)
    u = (c / b_gain) * (t - t_set)
    return AveragedModel(
        samples=np.column_stack([t, u]),
        t_set=t_set,
        c=c,
        gamma=0.4,
        alpha=alpha,
        b_gain=b_gain,
        k_star=feedforward_gain(alpha, c),
    )


class TestFindTSet:
    def test_linear_interpolation(self):
        samples = np.array([[39.0, -0.1], [40.0, 0.1]])
        assert find_t_set(samples) == pytest.approx(39.5)

    def test_exact_grid_zero(self):
        samples = np.array([[39.0, -0.1], [40.0, 0.0], [41.0, 0.1]])
        assert find_t_set(samples) == 40.0

    def test_no_crossing(self):
        samples = np.array([[39.0, 0.1], [40.0, 0.2]])
        with pytest.raises(NoCrossing):
            find_t_set(samples)

    def test_multiple_crossings(self):
        samples = np.array(
            [[38.0, -0.1], [39.0, 0.1], [40.0, -0.1], [41.0, 0.1]]
        )
        with pytest.raises(MultipleCrossings):
            find_t_set(samples)

    def test_refinement_bisection(self):
        true_root = 39.37
        samples = np.array([[39.0, -1.0], [40.0, 3.0]])  # crude bracket
        root = find_t_set(
            samples, refine=lambda t: t - true_root, refine_tol=0.001
        )
        assert root == pytest.approx(true_root, abs=0.001)


class TestSlopeFit:
    def test_exact_linear_curve(self):
        m = linear_model(c=0.42)
        assert fit_slope_c(m.samples, (30.0, 50.0), m.b_gain) == pytest.approx(
            0.42, rel=1e-10
        )

    def test_insufficient_samples(self):
        samples = np.array([[30.0, 0.0], [50.0, 0.5]])
        with pytest.raises(InsufficientSamples):
            fit_slope_c(samples, (30.0, 50.0), 20.0)


class TestFeedforwardGain:
    def test_basic(self):
        assert feedforward_gain(2.0, 0.5) == 4.0
        assert feedforward_gain(0.0, 0.5) == 0.0

    def test_invalid_slope(self):
        with pytest.raises(ValueError):
            feedforward_gain(2.0, 0.0)
        with pytest.raises(ValueError):
            feedforward_gain(2.0, -0.1)


class TestEquilibria:
    @pytest.mark.parametrize("d", [-8.0, -4.0, 4.0, 8.0])
    def test_formula_matches_integration(self, d):
        """Integrated equilibrium must hit the closed-form expression
        when the actuation curve is exactly linear."""
        m = linear_model(c=0.3, alpha=2.0)
        for with_ff in (False, True):
            expected = equilibrium_error_formula(m, d, with_ff)
            reached = steady_state_error(m, d, with_ff)
            assert reached == pytest.approx(expected, abs=1e-6)

    def test_feedforward_cancels_linear_disturbance(self):
        """With K = alpha/c the linear-regime equilibrium error vanishes."""
        m = linear_model(c=0.3, alpha=2.0)
        assert equilibrium_error_formula(m, 6.0, with_ff=True) == pytest.approx(
            0.0, abs=1e-12
        )
        assert abs(equilibrium_error_formula(m, 6.0, with_ff=False)) > 1.0

    def test_linearized_copy(self):
        m = linear_model()
        lin = m.linearized()
        assert lin.b_tilde(2.0) == pytest.approx(m.c * 2.0, rel=1e-10)
        assert lin.t_set == m.t_set

    def test_extrapolation_warns(self):
        m = linear_model()
        with pytest.warns(UserWarning, match="outside the sampled range"):
            m.u_tilde(m.samples[-1, 0] + 5.0)


class TestCircuitDerivedQuantities:
    def test_buffer_leakage_rate(self):
        p = CircuitParams()
        assert buffer_leakage_rate(p) == pytest.approx(
            2.0 / (p.c_fb * p.r10), rel=1e-12
        )
        assert buffer_leakage_rate(p) == pytest.approx(0.425532, abs=1e-6)


class TestCalibrateNtc:
    def test_hits_target(self):
        p = CircuitParams()
        for target in (38.0, 39.84, 42.0):
            calibrated = calibrate_ntc(p, target_t_set=target)
            assert gate_equality_root(calibrated) == pytest.approx(
                target, abs=1e-6
            )

    def test_unreachable_target(self):
        with pytest.raises(ConfigError):
            calibrate_ntc(CircuitParams(), target_t_set=39.84, b_lo=4600.0,
                          b_hi=4700.0)

    def test_preserves_other_params(self):
        p = CircuitParams(alpha=3.0)
        calibrated = calibrate_ntc(p)
        assert calibrated.alpha == 3.0
        assert calibrated.ntc.r_25 == p.ntc.r_25
        assert calibrated.ntc.b != p.ntc.b
