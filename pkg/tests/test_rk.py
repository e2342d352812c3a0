import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from railsim.rk import DormandPrince45, StepSizeUnderflow


def integrate(fun, t0, y0, t1, **kw):
    s = DormandPrince45(fun, t0, y0, t1, **kw)
    while s.status == "running":
        s.step()
    return s


class TestAccuracy:
    def test_exponential_decay(self):
        s = integrate(lambda t, y: (-y[0],), 0.0, (1.0,), 5.0, rtol=1e-8, atol=1e-10)
        assert s.t == 5.0
        assert s.y[0] == pytest.approx(math.exp(-5.0), abs=1e-9)

    def test_harmonic_oscillator(self):
        s = integrate(
            lambda t, y: (y[1], -y[0]), 0.0, (1.0, 0.0), 10.0, rtol=1e-9, atol=1e-12
        )
        assert s.y[0] == pytest.approx(math.cos(10.0), abs=1e-7)
        assert s.y[1] == pytest.approx(-math.sin(10.0), abs=1e-7)

    def test_against_scipy_reference(self):
        def rhs(t, y):
            return [y[1], -math.sin(y[0]) - 0.1 * y[1]]

        ref = solve_ivp(rhs, (0, 20), [1.2, 0.0], rtol=1e-12, atol=1e-14)
        s = integrate(
            lambda t, y: tuple(rhs(t, y)), 0.0, (1.2, 0.0), 20.0, rtol=1e-7, atol=1e-9
        )
        assert np.max(np.abs(np.array(s.y) - ref.y[:, -1])) < 1e-5

    def test_tolerance_scaling(self):
        # halving the tolerance reduces the achieved error
        errors = []
        for rtol in (1e-5, 1e-7, 1e-9):
            s = integrate(
                lambda t, y: (y[1], -y[0]), 0.0, (1.0, 0.0), 10.0,
                rtol=rtol, atol=rtol * 1e-2,
            )
            errors.append(abs(s.y[0] - math.cos(10.0)))
        assert errors[0] > errors[1] > errors[2]


class TestDenseOutput:
    def test_matches_solution_inside_steps(self):
        s = DormandPrince45(
            lambda t, y: (y[1], -y[0]), 0.0, (1.0, 0.0), 10.0, rtol=1e-9, atol=1e-12
        )
        worst = 0.0
        while s.status == "running":
            s.step()
            for frac in (0.2, 0.5, 0.8):
                tt = s.t_old + frac * (s.t - s.t_old)
                yd = s.dense(tt)
                worst = max(worst, abs(yd[0] - math.cos(tt)))
        assert worst < 1e-7

    def test_endpoints_reproduced(self):
        s = DormandPrince45(lambda t, y: (-0.5 * y[0],), 0.0, (2.0,), 1.0)
        s.step()
        assert s.dense(s.t_old)[0] == pytest.approx(2.0, abs=1e-14)
        assert s.dense(s.t)[0] == pytest.approx(s.y[0], abs=1e-12)


class TestStepping:
    def test_max_step_respected(self):
        s = DormandPrince45(lambda t, y: (-y[0],), 0.0, (1.0,), 1.0, max_step=0.01)
        while s.status == "running":
            s.step()
            assert s.t - s.t_old <= 0.01 + 1e-15

    def test_final_time_exact(self):
        s = integrate(lambda t, y: (1.0,), 0.0, (0.0,), 0.3777)
        assert s.t == 0.3777
        assert s.y[0] == pytest.approx(0.3777, rel=1e-12)

    def test_first_step_honored(self):
        s = DormandPrince45(lambda t, y: (-y[0],), 0.0, (1.0,), 1.0, first_step=1e-3)
        s.step()
        assert s.t == pytest.approx(1e-3, rel=1e-12)

    def test_underflow_raises(self):
        # a right-hand side whose output explodes forces endless rejection
        def nasty(t, y):
            return (1e300 * (1.0 + t),)

        with pytest.raises(StepSizeUnderflow):
            integrate(nasty, 0.0, (0.0,), 1.0, rtol=1e-12, atol=1e-14)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            DormandPrince45(lambda t, y: (0.0,), 1.0, (0.0,), 0.0)
        with pytest.raises(ValueError):
            DormandPrince45(lambda t, y: (0.0,), 0.0, (0.0,), 1.0, rtol=0.0)

    def test_equilibrium_grows_to_max_step(self):
        s = DormandPrince45(
            lambda t, y: (0.0, 0.0), 0.0, (1.0, -2.0), 10.0, max_step=0.5
        )
        steps = 0
        while s.status == "running":
            s.step()
            steps += 1
        assert s.y == (1.0, -2.0)
        assert steps < 40
