"""Scenario definitions: parameter defaults, the four built-in validation
cases, and the YAML file format.

Every physical quantity in a scenario file carries an explicit unit
("2.4 MW", "0.47+0.15j pu", "32 mH", "60 ms"); bare numbers are accepted
only for dimensionless values such as PI gains and solver tolerances.  A
file may start from a built-in case (`base_case: N`) and override fields,
or stand alone, in which case unspecified fields fall back to the shared
defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any

import yaml

from .control import ControlGains
from .network import FeederModel
from .perunit import BaseSystem, impedance_to_pu, inductance_to_pu, power_to_pu, rebase_reactance
from .rfc import RfcParams
from .simulator import Event, SimConfig

FAULT_ONSET_S = 1.0        # default fault application time
POST_FAULT_WINDOW_S = 3.0  # trace length kept after clearing


class ScenarioError(ValueError):
    """A scenario document is malformed; the message names the field path."""


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation experiment (all p.u. resolved)."""

    base: BaseSystem
    z_init: complex            # feeder entry impedance [p.u.]
    z_per_km: complex          # catenary impedance [p.u./km]
    load_pos_km: float
    x_t: float                 # transformer reactance [p.u.]
    x_f: float                 # filter reactance [p.u.]
    rfc: RfcParams
    gains: ControlGains
    p_load_mw: float
    q_load_mvar: float
    events: tuple[Event, ...]
    theta_50: float            # grid-side voltage angle [rad]
    config: SimConfig
    name: str = "scenario"
    measured_csv: str | None = None

    @property
    def load_s_pu(self) -> complex:
        return power_to_pu(self.p_load_mw, self.q_load_mvar, self.base)

    def feeder(self) -> FeederModel:
        """Feeder geometry without the load admittance (set by the load flow)."""
        return FeederModel(
            x_t=self.x_t,
            x_f=self.x_f,
            z_init=self.z_init,
            z_per_km=self.z_per_km,
            load_pos_km=self.load_pos_km,
        )


# Shared plant data: 10 MVA / 16.5 kV base; transformer 16.65 % on 17.4 MVA
# with a 32 mH filter; rotary reference reactances with the unit-transformer
# leakages folded in; manually tuned regulator settings.
_BASE = BaseSystem(s_base=10.0, v_base=16.5)
_X_T = rebase_reactance(0.1665, 17.4, _BASE.s_base)
_X_F = inductance_to_pu(0.032, _BASE)
_XQ_M_RAW, _MOTOR_TX_LEAK, _MOTOR_TX_MVA = 0.49, 0.079, 10.7
_XQ_G_RAW, _GEN_TX_LEAK, _GEN_TX_MVA = 0.53, 0.042, 10.0
_Z_INIT_OHM = 0.189 + 0.293j
_Z_PER_KM_OHM = 0.0335 + 0.031j


def effective_rfc_params(include_tx_leakage: bool = True) -> RfcParams:
    """Reference-machine reactances on the system base.

    With include_tx_leakage the unit-transformer leakages (rebased from their
    own ratings) are added to the machine quadrature reactances.
    """
    xq_m = _XQ_M_RAW
    xq_g = _XQ_G_RAW
    if include_tx_leakage:
        xq_m += rebase_reactance(_MOTOR_TX_LEAK, _MOTOR_TX_MVA, _BASE.s_base)
        xq_g += rebase_reactance(_GEN_TX_LEAK, _GEN_TX_MVA, _BASE.s_base)
    return RfcParams(xq_m=xq_m, xq_g=xq_g, k_u=0.03, u0=1.0)


def _defaults() -> Scenario:
    return Scenario(
        base=_BASE,
        z_init=impedance_to_pu(_Z_INIT_OHM, _BASE),
        z_per_km=impedance_to_pu(_Z_PER_KM_OHM, _BASE),
        load_pos_km=25.0,
        x_t=_X_T,
        x_f=_X_F,
        rfc=effective_rfc_params(),
        gains=ControlGains(),
        p_load_mw=0.0,
        q_load_mvar=0.0,
        events=(),
        theta_50=0.0,
        config=SimConfig(t_end=10.0),
        name="defaults",
    )


# (duration s, fault impedance p.u., fault position km, train load MW)
_CASES: dict[int, tuple[float, complex, float, float]] = {
    1: (0.060, 0.47 + 0.15j, 25.0, 2.40),
    2: (0.080, 0.50 + 0.20j, 25.0, 2.75),
    3: (0.120, 0.00 + 0.13j, 15.0, 4.25),
    4: (0.270, 0.00 + 0.15j, 20.0, 1.50),
}


def builtin_case(n: int) -> Scenario:
    """One of the four validation cases: a line-to-ground fault on a loaded
    feeder, applied at t = 1 s and cleared after the case's duration."""
    if n not in _CASES:
        raise ScenarioError(f"case id must be 1..4, got {n}")
    duration, z_fault, fault_km, p_mw = _CASES[n]
    return replace(
        _defaults(),
        name=f"case{n}",
        load_pos_km=fault_km + 5.0,  # train position is not part of the case data
        p_load_mw=p_mw,
        events=(
            Event("apply_fault", FAULT_ONSET_S, z_fault=z_fault, pos_km=fault_km),
            Event("clear_fault", round(FAULT_ONSET_S + duration, 9)),
        ),
        config=SimConfig(t_end=round(FAULT_ONSET_S + duration + POST_FAULT_WINDOW_S, 9)),
    )


def case_summaries() -> list[dict[str, Any]]:
    """Key parameters of the built-in cases, for display."""
    rows = []
    for n, (duration, z_fault, fault_km, p_mw) in _CASES.items():
        rows.append(
            {
                "case": n,
                "fault_duration_ms": duration * 1e3,
                "z_fault_pu": z_fault,
                "fault_pos_km": fault_km,
                "p_load_mw": p_mw,
                "limiting_expected": abs(z_fault) <= 0.2,
            }
        )
    return rows


# --- unit-annotated value parsing -------------------------------------------

_SCALES = {
    "power_mw": {"MW": 1.0, "kW": 1e-3, "W": 1e-6},
    "power_mvar": {"Mvar": 1.0, "kvar": 1e-3, "var": 1e-6},
    "power_mva": {"MVA": 1.0, "kVA": 1e-3},
    "voltage_kv": {"kV": 1.0, "V": 1e-3},
    "frequency_hz": {"Hz": 1.0},
    "time_s": {"s": 1.0, "ms": 1e-3},
    "distance_km": {"km": 1.0, "m": 1e-3},
    "inductance_h": {"H": 1.0, "mH": 1e-3},
    "fraction": {"pu": 1.0, "%": 0.01},
    "angle_rad": {"rad": 1.0, "deg": math.pi / 180.0},
}


def _split_quantity(raw: Any, path: str) -> tuple[complex, str]:
    if not isinstance(raw, str):
        raise ScenarioError(
            f"{path}: physical quantities need an explicit unit, got {raw!r}"
        )
    parts = raw.split()
    if len(parts) != 2:
        raise ScenarioError(f"{path}: expected '<value> <unit>', got {raw!r}")
    try:
        value = complex(parts[0])
    except ValueError as exc:
        raise ScenarioError(f"{path}: cannot parse number {parts[0]!r}") from exc
    return value, parts[1]


def _real(value: complex, path: str) -> float:
    if value.imag != 0:
        raise ScenarioError(f"{path}: expected a real value, got {value!r}")
    return value.real


def _quantity(raw: Any, kind: str, path: str) -> float:
    value, unit = _split_quantity(raw, path)
    scales = _SCALES[kind]
    if unit not in scales:
        raise ScenarioError(
            f"{path}: unit {unit!r} not valid here (expected one of {sorted(scales)})"
        )
    return _real(value, path) * scales[unit]


def _impedance(raw: Any, base: BaseSystem, path: str, per_km: bool = False) -> complex:
    value, unit = _split_quantity(raw, path)
    ohm, pu = ("ohm/km", "pu/km") if per_km else ("ohm", "pu")
    if unit == ohm:
        return impedance_to_pu(value, base)
    if unit == pu:
        return value
    raise ScenarioError(f"{path}: unit {unit!r} not valid here (expected {ohm} or {pu})")


def _number(raw: Any, path: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ScenarioError(f"{path}: expected a bare number, got {raw!r}")
    return float(raw)


def _boolean(raw: Any, path: str) -> bool:
    if not isinstance(raw, bool):
        raise ScenarioError(f"{path}: expected true/false, got {raw!r}")
    return raw


class _Section:
    """Tracks which keys of a mapping were consumed; flags leftovers."""

    def __init__(self, mapping: Any, path: str):
        if mapping is None:
            mapping = {}
        if not isinstance(mapping, dict):
            raise ScenarioError(f"{path}: expected a mapping")
        self.mapping = mapping
        self.path = path
        self.seen: set[str] = set()

    def get(self, key: str) -> Any:
        self.seen.add(key)
        return self.mapping.get(key)

    def finish(self) -> None:
        unknown = set(self.mapping) - self.seen
        if unknown:
            raise ScenarioError(f"{self.path}: unknown keys {sorted(unknown)}")


class _DuplicateKeyLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader: _DuplicateKeyLoader, node: yaml.MappingNode) -> dict:
    mapping: dict = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in mapping:
            raise ScenarioError(
                f"duplicate key {key!r} at line {key_node.start_mark.line + 1}"
            )
        mapping[key] = loader.construct_object(value_node, deep=True)
    return mapping


_DuplicateKeyLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping
)


def load_scenario(text: str) -> Scenario:
    """Parse a scenario document; unspecified fields keep their defaults."""
    try:
        doc = yaml.load(text, Loader=_DuplicateKeyLoader)
    except ScenarioError:
        raise
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ScenarioError("the document root must be a mapping")
    try:
        return _resolve_document(doc)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"scenario invariant violated: {exc}") from exc


def _resolve_document(doc: dict) -> Scenario:
    top = _Section(doc, "document")

    base_case = top.get("base_case")
    if base_case is not None:
        if not isinstance(base_case, int):
            raise ScenarioError(f"base_case: expected an integer, got {base_case!r}")
        scn = builtin_case(base_case)
    else:
        scn = _defaults()

    sys_sec = _Section(top.get("system"), "system")
    s_base = sys_sec.get("s_base")
    v_base = sys_sec.get("v_base")
    f_base = sys_sec.get("f_base")
    base = BaseSystem(
        s_base=_quantity(s_base, "power_mva", "system.s_base") if s_base is not None else scn.base.s_base,
        v_base=_quantity(v_base, "voltage_kv", "system.v_base") if v_base is not None else scn.base.v_base,
        f_base=_quantity(f_base, "frequency_hz", "system.f_base") if f_base is not None else scn.base.f_base,
    )
    sys_sec.finish()

    fdr = _Section(top.get("feeder"), "feeder")
    z_init = fdr.get("z_init")
    z_per_km = fdr.get("z_per_km")
    load_pos = fdr.get("load_position")
    fdr.finish()

    tx = _Section(top.get("transformer"), "transformer")
    x_t = scn.x_t
    x_f = scn.x_f
    rating = tx.get("rating")
    leakage = tx.get("leakage")
    if (rating is None) != (leakage is None):
        raise ScenarioError("transformer: rating and leakage must be given together")
    if rating is not None:
        x_t = rebase_reactance(
            _quantity(leakage, "fraction", "transformer.leakage"),
            _quantity(rating, "power_mva", "transformer.rating"),
            base.s_base,
        )
    filt = tx.get("filter_inductance")
    if filt is not None:
        x_f = inductance_to_pu(_quantity(filt, "inductance_h", "transformer.filter_inductance"), base)
    x_t_direct = tx.get("x_t")
    if x_t_direct is not None:
        x_t = _quantity(x_t_direct, "fraction", "transformer.x_t")
    x_f_direct = tx.get("x_f")
    if x_f_direct is not None:
        x_f = _quantity(x_f_direct, "fraction", "transformer.x_f")
    tx.finish()

    rfc_sec = _Section(top.get("rfc"), "rfc")
    rfc = _load_rfc(rfc_sec, scn.rfc, base)
    rfc_sec.finish()

    ctl = _Section(top.get("control"), "control")
    gains = _load_gains(ctl, scn.gains)
    ctl.finish()

    load = _Section(top.get("load"), "load")
    p_raw = load.get("p")
    q_raw = load.get("q")
    p_mw = _quantity(p_raw, "power_mw", "load.p") if p_raw is not None else scn.p_load_mw
    q_mvar = _quantity(q_raw, "power_mvar", "load.q") if q_raw is not None else scn.q_load_mvar
    load.finish()

    grid = _Section(top.get("grid"), "grid")
    th_raw = grid.get("theta_50")
    theta_50 = _quantity(th_raw, "angle_rad", "grid.theta_50") if th_raw is not None else scn.theta_50
    grid.finish()

    sim = _Section(top.get("sim"), "sim")
    config = _load_config(sim, scn.config)
    sim.finish()

    events_raw = top.get("events")
    events = _load_events(events_raw, base) if "events" in doc else scn.events

    name = top.get("name")
    measured = top.get("measured_csv")
    top.finish()

    return Scenario(
        base=base,
        z_init=_impedance(z_init, base, "feeder.z_init") if z_init is not None else scn.z_init,
        z_per_km=_impedance(z_per_km, base, "feeder.z_per_km", per_km=True)
        if z_per_km is not None
        else scn.z_per_km,
        load_pos_km=_quantity(load_pos, "distance_km", "feeder.load_position")
        if load_pos is not None
        else scn.load_pos_km,
        x_t=x_t,
        x_f=x_f,
        rfc=rfc,
        gains=gains,
        p_load_mw=p_mw,
        q_load_mvar=q_mvar,
        events=events,
        theta_50=theta_50,
        config=config,
        name=str(name) if name is not None else scn.name,
        measured_csv=str(measured) if measured is not None else scn.measured_csv,
    )


def _load_rfc(sec: _Section, current: RfcParams, base: BaseSystem) -> RfcParams:
    xq_m = current.xq_m
    xq_g = current.xq_g

    source_keys = {
        "xq_motor": sec.get("xq_motor"),
        "motor_tx_leakage": sec.get("motor_tx_leakage"),
        "motor_tx_rating": sec.get("motor_tx_rating"),
        "xq_generator": sec.get("xq_generator"),
        "gen_tx_leakage": sec.get("gen_tx_leakage"),
        "gen_tx_rating": sec.get("gen_tx_rating"),
    }
    include = sec.get("include_tx_leakage")
    if include is not None:
        include = _boolean(include, "rfc.include_tx_leakage")
    if any(v is not None for v in source_keys.values()) or include is not None:
        if any(v is None for v in source_keys.values()):
            missing = sorted(k for k, v in source_keys.items() if v is None)
            raise ScenarioError(f"rfc: machine data incomplete, missing {missing}")
        xq_m = _quantity(source_keys["xq_motor"], "fraction", "rfc.xq_motor")
        xq_g = _quantity(source_keys["xq_generator"], "fraction", "rfc.xq_generator")
        if include is None or include:
            xq_m += rebase_reactance(
                _quantity(source_keys["motor_tx_leakage"], "fraction", "rfc.motor_tx_leakage"),
                _quantity(source_keys["motor_tx_rating"], "power_mva", "rfc.motor_tx_rating"),
                base.s_base,
            )
            xq_g += rebase_reactance(
                _quantity(source_keys["gen_tx_leakage"], "fraction", "rfc.gen_tx_leakage"),
                _quantity(source_keys["gen_tx_rating"], "power_mva", "rfc.gen_tx_rating"),
                base.s_base,
            )

    xq_m_direct = sec.get("xq_m")
    if xq_m_direct is not None:
        xq_m = _quantity(xq_m_direct, "fraction", "rfc.xq_m")
    xq_g_direct = sec.get("xq_g")
    if xq_g_direct is not None:
        xq_g = _quantity(xq_g_direct, "fraction", "rfc.xq_g")

    droop = sec.get("droop")
    u0 = sec.get("no_load_voltage")
    return RfcParams(
        xq_m=xq_m,
        xq_g=xq_g,
        k_u=_quantity(droop, "fraction", "rfc.droop") if droop is not None else current.k_u,
        u0=_quantity(u0, "fraction", "rfc.no_load_voltage") if u0 is not None else current.u0,
    )


def _load_gains(sec: _Section, current: ControlGains) -> ControlGains:
    kwargs: dict[str, Any] = {}
    for key in ("kp_v", "ki_v", "kp_a", "ki_a", "kp_cl", "ki_cl"):
        raw = sec.get(key)
        if raw is not None:
            kwargs[key] = _number(raw, f"control.{key}")
    for key in ("t_c", "t_i"):
        raw = sec.get(key)
        if raw is not None:
            kwargs[key] = _quantity(raw, "time_s", f"control.{key}")
    for key in ("e_max", "i_max"):
        raw = sec.get(key)
        if raw is not None:
            kwargs[key] = _quantity(raw, "fraction", f"control.{key}")
    for key in ("anti_windup_voltage", "anti_windup_angle"):
        raw = sec.get(key)
        if raw is not None:
            kwargs[key] = _boolean(raw, f"control.{key}")
    return replace(current, **kwargs) if kwargs else current


def _load_config(sec: _Section, current: SimConfig) -> SimConfig:
    kwargs: dict[str, Any] = {}
    for key in ("t_end", "max_step", "output_dt"):
        raw = sec.get(key)
        if raw is not None:
            kwargs[key] = _quantity(raw, "time_s", f"sim.{key}")
    for key in ("rel_tol", "abs_tol"):
        raw = sec.get(key)
        if raw is not None:
            kwargs[key] = _number(raw, f"sim.{key}")
    return replace(current, **kwargs) if kwargs else current


def _load_events(raw: Any, base: BaseSystem) -> tuple[Event, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ScenarioError("events: expected a list")
    events = []
    for i, item in enumerate(raw):
        sec = _Section(item, f"events[{i}]")
        kind = sec.get("kind")
        if kind not in ("apply_fault", "clear_fault"):
            raise ScenarioError(f"events[{i}].kind: expected apply_fault or clear_fault")
        time = _quantity(sec.get("time"), "time_s", f"events[{i}].time")
        if kind == "apply_fault":
            z_raw = sec.get("z_fault")
            if z_raw is None:
                raise ScenarioError(f"events[{i}]: apply_fault needs z_fault")
            z_fault = _impedance(z_raw, base, f"events[{i}].z_fault")
            pos = _quantity(sec.get("position"), "distance_km", f"events[{i}].position")
            events.append(Event(kind, time, z_fault=z_fault, pos_km=pos))
        else:
            events.append(Event(kind, time))
        sec.finish()
    times = [e.time for e in events]
    if times != sorted(times):
        raise ScenarioError("events: must be ordered by time")
    return tuple(events)


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def dump_scenario(scenario: Scenario) -> str:
    """Serialize to the canonical document form; load_scenario inverts it."""
    doc: dict[str, Any] = {
        "name": scenario.name,
        "system": {
            "s_base": f"{scenario.base.s_base!r} MVA",
            "v_base": f"{scenario.base.v_base!r} kV",
            "f_base": f"{scenario.base.f_base!r} Hz",
        },
        "feeder": {
            "z_init": f"{scenario.z_init!r} pu",
            "z_per_km": f"{scenario.z_per_km!r} pu/km",
            "load_position": f"{scenario.load_pos_km!r} km",
        },
        "transformer": {
            "x_t": f"{scenario.x_t!r} pu",
            "x_f": f"{scenario.x_f!r} pu",
        },
        "rfc": {
            "xq_m": f"{scenario.rfc.xq_m!r} pu",
            "xq_g": f"{scenario.rfc.xq_g!r} pu",
            "droop": f"{scenario.rfc.k_u!r} pu",
            "no_load_voltage": f"{scenario.rfc.u0!r} pu",
        },
        "control": {
            "kp_v": scenario.gains.kp_v,
            "ki_v": scenario.gains.ki_v,
            "kp_a": scenario.gains.kp_a,
            "ki_a": scenario.gains.ki_a,
            "kp_cl": scenario.gains.kp_cl,
            "ki_cl": scenario.gains.ki_cl,
            "t_c": f"{scenario.gains.t_c!r} s",
            "t_i": f"{scenario.gains.t_i!r} s",
            "e_max": f"{scenario.gains.e_max!r} pu",
            "i_max": f"{scenario.gains.i_max!r} pu",
            "anti_windup_voltage": scenario.gains.anti_windup_voltage,
            "anti_windup_angle": scenario.gains.anti_windup_angle,
        },
        "load": {
            "p": f"{scenario.p_load_mw!r} MW",
            "q": f"{scenario.q_load_mvar!r} Mvar",
        },
        "grid": {"theta_50": f"{scenario.theta_50!r} rad"},
        "sim": {
            "t_end": f"{scenario.config.t_end!r} s",
            "rel_tol": scenario.config.rel_tol,
            "abs_tol": scenario.config.abs_tol,
            "max_step": f"{scenario.config.max_step!r} s",
            "output_dt": f"{scenario.config.output_dt!r} s",
        },
        "events": [
            {
                "kind": ev.kind,
                "time": f"{ev.time!r} s",
                **(
                    {"z_fault": f"{ev.z_fault!r} pu", "position": f"{ev.pos_km!r} km"}
                    if ev.kind == "apply_fault"
                    else {}
                ),
            }
            for ev in scenario.events
        ],
    }
    if scenario.measured_csv is not None:
        doc["measured_csv"] = scenario.measured_csv
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)
