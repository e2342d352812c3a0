import numpy as np
import pytest

from railsim.compare import ComparisonError, compare_traces, resample_align
from railsim.simulator import TraceSet
from railsim.traceio import MeasuredTrace


def make_trace(time, u, i):
    n = len(time)
    z = np.zeros(n)
    return TraceSet(
        time=np.asarray(time, dtype=float),
        u_mag=np.asarray(u, dtype=float),
        i_mag=np.asarray(i, dtype=float),
        p_g=z, q_g=z, e_mag=z.copy() + 1.0, delta=z,
        limiting=np.zeros(n, dtype=bool),
    )


@pytest.fixture
def wiggly():
    t = np.arange(0.0, 4.0, 0.002)
    u = 1.0 + 0.05 * np.sin(2 * np.pi * 0.8 * t) + 0.01 * np.sin(2 * np.pi * 3.1 * t)
    i = 0.3 + 0.1 * np.cos(2 * np.pi * 0.5 * t)
    return make_trace(t, u, i)


def as_measured(trace, dt_offset=0.0):
    return MeasuredTrace(
        time=trace.time + dt_offset, u_mag=trace.u_mag.copy(), i_mag=trace.i_mag.copy()
    )


class TestIdentity:
    def test_self_comparison_is_zero(self, wiggly):
        report = compare_traces(wiggly, as_measured(wiggly))
        assert report.rmse_u == 0.0
        assert report.rmse_i == 0.0
        assert report.max_err_u == 0.0
        assert report.max_err_i == 0.0
        assert report.offset == 0.0

    def test_constant_offset_closed_form(self, wiggly):
        # 10 mV on the 16.5 kV base
        du = 0.010 / 16.5
        shifted = MeasuredTrace(
            time=wiggly.time.copy(), u_mag=wiggly.u_mag + du, i_mag=wiggly.i_mag.copy()
        )
        report = compare_traces(wiggly, shifted)
        assert report.rmse_u == pytest.approx(du, rel=1e-12)
        assert report.max_err_u == pytest.approx(du, rel=1e-12)
        assert report.rmse_i == 0.0


class TestAlignment:
    def test_synthetic_shift_recovered(self, wiggly):
        # recording timestamps lag the simulation by 40 ms
        lagged = as_measured(wiggly, dt_offset=0.040)
        pair = resample_align(wiggly, lagged, max_offset=0.1)
        assert pair.offset == pytest.approx(-0.040, abs=0.002 + 1e-12)
        report = compare_traces(wiggly, lagged, max_offset=0.1)
        assert report.rmse_u < 1e-6

    def test_no_search_keeps_zero_offset(self, wiggly):
        pair = resample_align(wiggly, as_measured(wiggly, 0.04))
        assert pair.offset == 0.0

    def test_non_overlapping_rejected(self, wiggly):
        far = as_measured(wiggly, dt_offset=100.0)
        with pytest.raises(ComparisonError):
            resample_align(wiggly, far)


class TestWindows:
    def test_partition(self, wiggly):
        report = compare_traces(wiggly, as_measured(wiggly), fault_window=(1.0, 1.5))
        assert set(report.windows) == {"pre_fault", "during_fault", "post_fault"}
        total = sum(w.n_samples for w in report.windows.values())
        assert total == report.n_samples
        assert report.windows["during_fault"].n_samples > 0

    def test_window_metrics_localize_error(self, wiggly):
        mutated = as_measured(wiggly)
        mask = (mutated.time >= 1.0) & (mutated.time < 1.5)
        mutated.u_mag[mask] += 0.05
        report = compare_traces(wiggly, mutated, fault_window=(1.0, 1.5))
        assert report.windows["during_fault"].rmse_u == pytest.approx(0.05, rel=1e-6)
        assert report.windows["pre_fault"].rmse_u < 1e-9
        assert report.windows["post_fault"].rmse_u < 1e-9

    def test_bad_window(self, wiggly):
        with pytest.raises(ComparisonError):
            compare_traces(wiggly, as_measured(wiggly), fault_window=(2.0, 1.0))


def test_kv_rendering(wiggly):
    report = compare_traces(wiggly, as_measured(wiggly), fault_window=(1.0, 1.5))
    kv = report.to_kv()
    assert "rmse_u = 0.0" in kv
    assert "during_fault.rmse_i = " in kv
    parsed = dict(
        line.split(" = ") for line in kv.strip().splitlines()
    )
    assert float(parsed["offset_s"]) == 0.0
    assert int(parsed["n_samples"]) == report.n_samples
