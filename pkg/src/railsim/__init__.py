"""Phasor-domain simulator for static frequency converters on 16 2/3 Hz
railway grids: steady-state rotary-converter reference laws, PI voltage and
angle regulation with current limiting, a Norton-coupled feeder network, and
a fault-scenario harness."""

from .control import ControlGains, InverterOutput, Measurements, SfcState
from .loadflow import LoadFlowError, LoadFlowResult, solve_loadflow
from .network import FeederModel, NetworkError, NetworkSolution, build_admittance, solve
from .perunit import BaseSystem, impedance_to_pu, inductance_to_pu, rebase_reactance
from .rfc import RfcParams, angle_reference, phase_shift, voltage_reference
from .scenario import (
    Scenario,
    ScenarioError,
    builtin_case,
    dump_scenario,
    load_scenario,
    load_scenario_file,
)
from .simulator import Event, SimConfig, SimulationError, TraceSet, locate_mode_switch, run

__version__ = "0.1.0"

__all__ = [
    "BaseSystem",
    "ControlGains",
    "Event",
    "FeederModel",
    "InverterOutput",
    "LoadFlowError",
    "LoadFlowResult",
    "Measurements",
    "NetworkError",
    "NetworkSolution",
    "RfcParams",
    "Scenario",
    "ScenarioError",
    "SfcState",
    "SimConfig",
    "SimulationError",
    "TraceSet",
    "angle_reference",
    "build_admittance",
    "builtin_case",
    "dump_scenario",
    "impedance_to_pu",
    "inductance_to_pu",
    "load_scenario",
    "load_scenario_file",
    "locate_mode_switch",
    "phase_shift",
    "rebase_reactance",
    "run",
    "solve",
    "solve_loadflow",
    "voltage_reference",
]
