import cmath
import math

import numpy as np
import pytest

from railsim.control import (
    ControlGains,
    IntegrationFault,
    InverterOutput,
    Measurements,
    References,
    SfcState,
    control_derivatives,
    current_from_phasors,
    current_limit_update,
    inverter_output,
    reset_current_limit,
)

GAINS = ControlGains()


def quiet_meas(u_g=1.0, theta_g=0.0, p_g=0.0, q_g=0.0, i_mag=0.0, gamma=0.0):
    return Measurements(u_g, theta_g, p_g, q_g, i_mag, gamma)


class TestControlDerivatives:
    def test_equilibrium_all_zero(self):
        d = control_derivatives(SfcState(), quiet_meas(u_g=1.0), References(0.0, 1.0), GAINS)
        assert d == (0.0,) * 7

    def test_angle_error_integration_and_lag_target(self):
        meas = quiet_meas(theta_g=0.0)
        d = control_derivatives(SfcState(), meas, References(0.01, 1.0), GAINS)
        assert d[1] == pytest.approx(0.01, abs=1e-15)  # angle integrator
        # lag_d target = kp_a * 0.01 = 2e-4; derivative = target / t_c
        assert d[4] == pytest.approx(0.02 * 0.01 / 0.05, rel=1e-12)

    def test_voltage_pi_output(self):
        state = SfcState(int_v=0.1)
        meas = quiet_meas(u_g=0.95)
        d = control_derivatives(state, meas, References(0.0, 1.0), GAINS)
        # |E_ref| = 0.02*0.05 + 2*0.1 = 0.201, below the 1.15 clamp
        assert d[3] == pytest.approx((0.201 - 0.0) / 0.05, rel=1e-12)
        assert d[0] == pytest.approx(0.05, abs=1e-15)

    def test_clamped_target(self):
        state = SfcState(int_v=1.0)  # |E_ref| = 2.0 -> clamp to 1.15
        d = control_derivatives(state, quiet_meas(u_g=1.0), References(0.0, 1.0), GAINS)
        assert d[3] == pytest.approx((1.15 - 0.0) / 0.05, rel=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(IntegrationFault):
            control_derivatives(
                SfcState(), quiet_meas(u_g=float("nan")), References(0.0, 1.0), GAINS
            )


class TestWindup:
    def test_windup_grows_without_anti_windup(self):
        # sustained undervoltage with the PI output clamped: integrator keeps
        # growing when anti-windup is off
        state = SfcState(int_v=1.0)
        meas = quiet_meas(u_g=0.5)
        int_v = state.int_v
        for _ in range(50):
            d = control_derivatives(state, meas, References(0.0, 1.0), GAINS)
            assert d[0] == pytest.approx(0.5)
            int_v += d[0] * 0.01
            state = state._replace(int_v=int_v)
        assert state.int_v > 1.2

    def test_anti_windup_halts_integration(self):
        gains = ControlGains(anti_windup_voltage=True)
        state = SfcState(int_v=1.0)  # e_ref = 2*1.0 + kp*err > e_max
        d = control_derivatives(state, quiet_meas(u_g=0.5), References(0.0, 1.0), gains)
        assert d[0] == 0.0

    def test_anti_windup_allows_unwinding(self):
        gains = ControlGains(anti_windup_voltage=True)
        state = SfcState(int_v=1.0)
        # overvoltage: error is negative, integration must keep running so the
        # integrator can leave saturation
        d = control_derivatives(state, quiet_meas(u_g=1.3), References(0.0, 1.0), gains)
        assert d[0] == pytest.approx(-0.3)


class TestCurrentLimit:
    def test_below_threshold_inactive(self):
        d_int, de, dd, lim = current_limit_update(
            SfcState(), quiet_meas(i_mag=1.0), InverterOutput(1.0, 0.0, False), GAINS
        )
        assert (d_int, de, dd, lim) == (0.0, 0.0, 0.0, False)

    def test_pure_magnitude_action(self):
        # delta - gamma = pi/2: all correction in the magnitude channel
        meas = quiet_meas(i_mag=2.5, gamma=0.0)
        out = InverterOutput(1.1, math.pi / 2, True)
        d_int, de, dd, lim = current_limit_update(SfcState(), meas, out, GAINS)
        assert lim
        assert d_int == pytest.approx(-0.5)
        assert de == pytest.approx(-6.0, rel=1e-12)
        assert dd == pytest.approx(0.0, abs=1e-12)

    def test_pure_angle_action(self):
        meas = quiet_meas(i_mag=2.5, gamma=0.0)
        out = InverterOutput(1.0, 0.0, True)
        _, de, dd, lim = current_limit_update(SfcState(), meas, out, GAINS)
        assert lim
        assert de == pytest.approx(0.0, abs=1e-12)
        assert dd == pytest.approx(-6.0, rel=1e-12)

    def test_integral_contribution(self):
        meas = quiet_meas(i_mag=2.5, gamma=0.0)
        out = InverterOutput(1.0, math.pi / 2, True)
        _, de, _, _ = current_limit_update(SfcState(int_cl=-0.1), meas, out, GAINS)
        assert de == pytest.approx(12 * (-0.5) + 75 * (-0.1), rel=1e-12)

    def test_reset(self):
        state = SfcState(int_cl=0.7, filt_de=0.3, filt_dd=-0.2)
        out = reset_current_limit(state)
        assert out.int_cl == 0.0
        assert out.filt_de == 0.3
        assert out.filt_dd == -0.2
        assert reset_current_limit(out) == out  # idempotent

    def test_overcurrent_corrections_reduce_current(self):
        # for 0 < delta-gamma < pi/2 both sensitivities are positive, so the
        # correction pair must predict a current reduction
        rng = np.random.default_rng(3)
        x = 0.2188
        for _ in range(100):
            rel = rng.uniform(0.05, math.pi / 2 - 0.05)
            e_mag = rng.uniform(0.5, 1.15)
            i_mag = rng.uniform(2.0 + 1e-6, 3.0)
            meas = quiet_meas(i_mag=i_mag, gamma=0.0)
            out = InverterOutput(e_mag, rel, True)
            _, de, dd, lim = current_limit_update(SfcState(), meas, out, GAINS)
            assert lim
            delta_i = (math.sin(rel) * de + e_mag * math.cos(rel) * dd) / x
            assert delta_i < 0


class TestInverterOutput:
    def test_inside_range(self):
        assert inverter_output(SfcState(lag_e=1.0, lag_d=0.2), GAINS).e_mag == 1.0

    def test_upper_clamp(self):
        assert inverter_output(SfcState(lag_e=1.30), GAINS).e_mag == 1.15

    def test_lower_clamp(self):
        assert inverter_output(SfcState(lag_e=-0.05), GAINS).e_mag == 0.0


class TestCurrentFromPhasors:
    def test_equal_phasors(self):
        assert current_from_phasors(1 + 1j, 1 + 1j, 0.1, 0.1) == 0j

    def test_quarter_turn(self):
        # E=1 at 90deg, U=1 at 0, X=1: (j-1)/j = 1+j
        i = current_from_phasors(1j, 1 + 0j, 0.5, 0.5)
        assert i == pytest.approx(1 + 1j)
        assert abs(i) == pytest.approx(math.sqrt(2))

    def test_magnitude_matches_projection_formula(self):
        # |I| from complex division equals (|E|sin(d-g) - |U|sin(th-g))/X
        e = cmath.rect(1.1, 0.1)
        u = cmath.rect(1.0, 0.0)
        x = 0.2189
        i = current_from_phasors(e, u, x, 0.0)
        gamma = cmath.phase(i)
        proj = (1.1 * math.sin(0.1 - gamma) - 1.0 * math.sin(0.0 - gamma)) / x
        assert abs(i) == pytest.approx(proj, abs=1e-12)

    def test_projection_formula_random(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            e = cmath.rect(rng.uniform(0.1, 1.5), rng.uniform(-math.pi, math.pi))
            u = cmath.rect(rng.uniform(0.1, 1.5), rng.uniform(-math.pi, math.pi))
            x = rng.uniform(0.05, 1.0)
            if abs(e - u) < 1e-9:
                continue
            i = current_from_phasors(e, u, x, 0.0)
            gamma = cmath.phase(i)
            proj = (
                abs(e) * math.sin(cmath.phase(e) - gamma)
                - abs(u) * math.sin(cmath.phase(u) - gamma)
            ) / x
            assert abs(i) == pytest.approx(proj, abs=1e-10)

    def test_zero_reactance_rejected(self):
        with pytest.raises(ValueError):
            current_from_phasors(1 + 0j, 0.9 + 0j, 0.0, 0.0)


def test_gains_validation():
    with pytest.raises(ValueError):
        ControlGains(t_c=0.0)
    with pytest.raises(ValueError):
        ControlGains(t_i=-1e-5)
    with pytest.raises(ValueError):
        ControlGains(e_max=0.0)
    with pytest.raises(ValueError):
        ControlGains(i_max=-2.0)
    with pytest.raises(ValueError):
        ControlGains(kp_v=float("inf"))
