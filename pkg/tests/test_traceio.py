import numpy as np
import pytest

from railsim.scenario import builtin_case
from railsim.simulator import run
from railsim.traceio import (
    TraceFormatError,
    parse_trace,
    read_measured,
    read_trace,
    write_trace,
)


@pytest.fixture(scope="module")
def short_trace():
    from dataclasses import replace

    scn = builtin_case(1)
    scn = replace(scn, config=replace(scn.config, t_end=1.2))
    return run(scn)


def test_round_trip_exact(short_trace, tmp_path):
    path = tmp_path / "trace.csv"
    write_trace(short_trace, str(path))
    back = read_trace(str(path))
    for col in ("time", "u_mag", "i_mag", "p_g", "q_g", "e_mag", "delta"):
        assert np.array_equal(getattr(back, col), getattr(short_trace, col))
    assert np.array_equal(back.limiting, short_trace.limiting)


def test_parse_rejects_wrong_header():
    with pytest.raises(TraceFormatError):
        parse_trace("a,b,c\n1,2,3\n")


def test_parse_rejects_empty():
    with pytest.raises(TraceFormatError):
        parse_trace("")
    with pytest.raises(TraceFormatError):
        parse_trace(dump_trace_header_only())


def dump_trace_header_only():
    return "time_s,u_pu,i_pu,p_pu,q_pu,e_pu,delta_rad,limiting\n"


def test_parse_rejects_garbage():
    with pytest.raises(TraceFormatError):
        parse_trace(dump_trace_header_only() + "0.0,a,b,c,d,e,f,0\n")


def test_measured_reader(tmp_path):
    path = tmp_path / "meas.csv"
    path.write_text("time_s,u_pu,i_pu\n0.0,1.0,0.2\n0.1,0.99,0.21\n")
    m = read_measured(str(path))
    assert np.array_equal(m.time, [0.0, 0.1])
    assert np.array_equal(m.u_mag, [1.0, 0.99])


def test_measured_reader_accepts_sim_traces(short_trace, tmp_path):
    # a simulated trace is a superset of the measured schema
    path = tmp_path / "sim.csv"
    write_trace(short_trace, str(path))
    m = read_measured(str(path))
    assert np.array_equal(m.u_mag, short_trace.u_mag)


def test_measured_reader_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time_s,volts\n0,1\n")
    with pytest.raises(TraceFormatError):
        read_measured(str(p))
    p.write_text("time_s,u_pu,i_pu\n0.2,1,1\n0.1,1,1\n")
    with pytest.raises(TraceFormatError, match="increasing"):
        read_measured(str(p))
    p.write_text("time_s,u_pu,i_pu\n")
    with pytest.raises(TraceFormatError, match="no data"):
        read_measured(str(p))
