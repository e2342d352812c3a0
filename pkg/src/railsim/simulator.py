"""Hybrid integration engine: adaptive stepping over the controller ODE with
the network solved algebraically at every derivative evaluation.

Discrete structure handled on top of the continuous solver:
  * timed fault events — each segment integrates exactly to the event time,
    the feeder is swapped, and integration restarts;
  * the current-limit threshold — a state-dependent switch located by
    bisection on the dense output, with the limit integrator reset whenever
    the current drops back under the threshold.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .control import (
    ControlGains,
    Measurements,
    References,
    SfcState,
    control_derivatives,
    reset_current_limit,
)
from .loadflow import LoadFlowResult, solve_loadflow
from .network import FeederModel, NortonPort, clear_fault, set_fault
from .rfc import RfcParams, angle_reference, voltage_reference
from .rk import DormandPrince45, StepSizeUnderflow

SWITCH_TIME_TOL = 1e-6  # [s] localisation window for threshold crossings


class SimulationError(RuntimeError):
    """Integration failed; the message carries time and state context."""


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    max_step: float = 0.005   # [s]
    output_dt: float = 0.001  # [s] trace sampling interval

    def __post_init__(self) -> None:
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0 or self.output_dt <= 0:
            raise ValueError("max_step and output_dt must be positive")


@dataclass(frozen=True)
class Event:
    """Timed network change: apply_fault carries the fault parameters."""

    kind: str               # "apply_fault" | "clear_fault"
    time: float             # [s]
    z_fault: complex = 0j   # fault impedance [p.u.], apply_fault only
    pos_km: float = 0.0     # fault position, apply_fault only

    def __post_init__(self) -> None:
        if self.kind not in ("apply_fault", "clear_fault"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.time < 0:
            raise ValueError(f"event time must be non-negative, got {self.time}")


@dataclass
class TraceSet:
    """Sampled series at the point of connection, aligned on one time grid."""

    time: np.ndarray
    u_mag: np.ndarray
    i_mag: np.ndarray
    p_g: np.ndarray
    q_g: np.ndarray
    e_mag: np.ndarray
    delta: np.ndarray
    limiting: np.ndarray
    states: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        n = len(self.time)
        for name in ("u_mag", "i_mag", "p_g", "q_g", "e_mag", "delta", "limiting"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} length mismatch")
        if n > 1 and not np.all(np.diff(self.time) > 0):
            raise ValueError("time samples must be strictly increasing")


def locate_mode_switch(
    f: Callable[[float], float], t_lo: float, t_hi: float, tol: float = SWITCH_TIME_TOL
) -> float:
    """Bisect a sign change of f on [t_lo, t_hi] to a window of width tol.

    Returns the right edge of the final bracket, i.e. a time at or just past
    the crossing; f(t_lo) == 0 returns t_lo immediately.
    """
    f_lo = f(t_lo)
    if f_lo == 0.0:
        return t_lo
    f_hi = f(t_hi)
    if f_lo * f_hi > 0.0:
        raise ValueError(f"no sign change on [{t_lo}, {t_hi}]")
    lo_positive = f_lo > 0.0
    while t_hi - t_lo > tol:
        t_mid = 0.5 * (t_lo + t_hi)
        f_mid = f(t_mid)
        if f_mid != 0.0 and (f_mid > 0.0) == lo_positive:
            t_lo = t_mid
        else:
            t_hi = t_mid
    return t_hi


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


class _Plant:
    """Closed-loop right-hand side for one fixed feeder configuration."""

    def __init__(
        self,
        feeder: FeederModel,
        rfc: RfcParams,
        gains: ControlGains,
        theta_50: float,
        freeze_eps: float = 0.0,
    ):
        self.port = NortonPort(feeder)
        self.rfc = rfc
        self.gains = gains
        self.theta_50 = theta_50
        # Below this level the limit-correction filters are numerically dead;
        # freezing them keeps the fast time constant from capping the step
        # size long after the corrections have decayed to nothing.
        self.freeze_eps = freeze_eps

    def measure(self, y: Sequence[float]) -> Measurements:
        e = cmath.rect(_clamp(y[3], 0.0, self.gains.e_max), y[4])
        sol = self.port(e)
        u = sol.u_poc
        i = sol.i_inv
        return Measurements(abs(u), cmath.phase(u), sol.p_g, sol.q_g, abs(i), cmath.phase(i))

    def i_mag(self, y: Sequence[float]) -> float:
        e = cmath.rect(_clamp(y[3], 0.0, self.gains.e_max), y[4])
        sol = self.port(e)
        return abs(sol.i_inv)

    def switch_values(self, y: Sequence[float]) -> tuple[float, float, float, float, float]:
        """Signed distances to the switching surfaces of the control law.

        Index 0 is the current-limit threshold (the only surface with a
        discrete action attached); the rest are the magnitude-command and
        lag-output clamp edges, located so that no step straddles a
        derivative kink.
        """
        g = self.gains
        meas = self.measure(y)
        u_ref = voltage_reference(self.rfc, meas.q_g)
        e_cmd = g.kp_v * (u_ref - meas.u_g) + g.ki_v * y[0] + y[5]
        return (
            meas.i_mag - g.i_max,
            e_cmd - g.e_max,
            e_cmd,
            y[3] - g.e_max,
            y[3],
        )

    def __call__(self, t: float, y: Sequence[float]) -> tuple:
        meas = self.measure(y)
        refs = References(
            angle_reference(self.rfc, self.theta_50, meas.p_g, meas.q_g, meas.u_g),
            voltage_reference(self.rfc, meas.q_g),
        )
        d = control_derivatives(SfcState._make(y), meas, refs, self.gains)
        if (
            meas.i_mag <= self.gains.i_max
            and abs(y[5]) < self.freeze_eps
            and abs(y[6]) < self.freeze_eps
        ):
            d = d[:5] + (0.0, 0.0)
        return d


class _TraceRecorder:
    """Collects samples on the k * output_dt grid as integration advances."""

    def __init__(self, output_dt: float, gains: ControlGains, keep_states: bool):
        self.dt = output_dt
        self.gains = gains
        self.next_k = 0
        self.rows: list[tuple] = []
        self.states: list[tuple] | None = [] if keep_states else None

    def emit(self, t: float, y: Sequence[float], plant: _Plant) -> None:
        meas = plant.measure(y)
        e_mag = _clamp(y[3], 0.0, self.gains.e_max)
        self.rows.append(
            (t, meas.u_g, meas.i_mag, meas.p_g, meas.q_g, e_mag, y[4],
             meas.i_mag > self.gains.i_max)
        )
        if self.states is not None:
            self.states.append(tuple(y))
        self.next_k += 1

    def collect(
        self,
        t_lo: float,
        t_hi: float,
        plant: _Plant,
        dense: Callable[[float], Sequence[float]],
    ) -> None:
        """Emit every grid point in (t_lo, t_hi] using the step interpolant.

        Comparisons carry a 1e-12 relative slack so a grid point one rounding
        error past a segment boundary still belongs to the ending segment.
        """
        while True:
            tk = self.next_k * self.dt
            if tk - t_hi > 1e-12 * max(1.0, abs(t_hi)):
                break
            if tk - t_lo > 1e-12 * max(1.0, abs(t_lo)):
                self.emit(tk, dense(tk), plant)
            else:
                # Grid point at or before the interval start was already
                # emitted by the previous step/segment.
                self.next_k += 1

    def build(self) -> TraceSet:
        cols = list(zip(*self.rows))
        return TraceSet(
            time=np.array(cols[0]),
            u_mag=np.array(cols[1]),
            i_mag=np.array(cols[2]),
            p_g=np.array(cols[3]),
            q_g=np.array(cols[4]),
            e_mag=np.array(cols[5]),
            delta=np.array(cols[6]),
            limiting=np.array(cols[7], dtype=bool),
            states=np.array(self.states) if self.states is not None else None,
        )


def _apply_event(feeder: FeederModel, event: Event) -> FeederModel:
    if event.kind == "apply_fault":
        return set_fault(feeder, event.z_fault, event.pos_km)
    return clear_fault(feeder)


def _integrate_segment(
    plant: _Plant,
    t0: float,
    t1: float,
    state: tuple,
    cfg: SimConfig,
    recorder: _TraceRecorder,
) -> tuple:
    """Advance state from t0 to t1, restarting at every switching-surface
    crossing so no accepted step straddles a discontinuity."""
    t = t0
    signs = tuple(v > 0.0 for v in plant.switch_values(state))
    while t < t1:
        stepper = DormandPrince45(
            plant, t, state, t1, cfg.rel_tol, cfg.abs_tol, cfg.max_step
        )
        while stepper.status == "running":
            try:
                stepper.step()
            except StepSizeUnderflow as exc:
                raise SimulationError(
                    f"step size underflow at t={exc.t:.9f} s (state={exc.y})"
                ) from exc
            if not all(map(math.isfinite, stepper.y)):
                raise SimulationError(
                    f"non-finite state at t={stepper.t:.9f} s (state={stepper.y})"
                )

            # Probe the step midpoint as well as its end so an excursion that
            # crosses a surface and returns within one step is still seen.
            crossing_at = None
            changed: tuple[int, ...] = ()
            for t_probe in (0.5 * (stepper.t_old + stepper.t), stepper.t):
                vals = plant.switch_values(stepper.dense(t_probe))
                changed = tuple(
                    i for i, v in enumerate(vals) if (v > 0.0) != signs[i]
                )
                if changed:
                    crossing_at = t_probe
                    break

            if crossing_at is None:
                recorder.collect(stepper.t_old, stepper.t, plant, stepper.dense)
                continue

            t_star = min(
                locate_mode_switch(
                    lambda tt, i=i: plant.switch_values(stepper.dense(tt))[i],
                    stepper.t_old,
                    crossing_at,
                )
                for i in changed
            )
            y_star = tuple(stepper.dense(t_star))
            new_signs = tuple(v > 0.0 for v in plant.switch_values(y_star))
            if signs[0] and not new_signs[0]:
                # Current fell back under the limit: clear the limit integrator.
                y_star = tuple(reset_current_limit(SfcState._make(y_star)))
            signs = new_signs
            recorder.collect(stepper.t_old, t_star, plant, stepper.dense)
            t, state = t_star, y_star
            break  # discard the stepper; restart from the switch point
        else:
            t, state = stepper.t, stepper.y
    return state


def run(
    scenario,
    config: SimConfig | None = None,
    keep_states: bool = False,
    loadflow: LoadFlowResult | None = None,
) -> TraceSet:
    """Simulate a scenario from its load-flow equilibrium.

    The scenario supplies the feeder geometry, reference parameters, control
    gains, train demand, grid-side angle and event list; config overrides
    its solver settings.  Repeated runs of the same inputs are bitwise
    identical.
    """
    cfg = config if config is not None else scenario.config
    gains: ControlGains = scenario.gains
    rfc: RfcParams = scenario.rfc
    theta_50: float = scenario.theta_50

    events = sorted(scenario.events, key=lambda e: e.time)
    for ev in events:
        if ev.time > cfg.t_end:
            raise SimulationError(f"event at t={ev.time} s lies beyond t_end={cfg.t_end} s")

    if loadflow is None:
        loadflow = solve_loadflow(
            scenario.feeder(), scenario.load_s_pu, rfc, gains, theta_50
        )
    feeder = loadflow.feeder
    state = tuple(loadflow.controller_init)

    recorder = _TraceRecorder(cfg.output_dt, gains, keep_states)
    # An explicit solver holds a decayed stiff mode hovering near abs_tol
    # instead of letting it vanish; freezing below ten times that level cuts
    # the mode loose without touching anything the tolerances can see.
    freeze_eps = cfg.abs_tol * 10.0
    plant = _Plant(feeder, rfc, gains, theta_50, freeze_eps)
    if plant.i_mag(state) <= gains.i_max:
        state = tuple(reset_current_limit(SfcState._make(state)))
    recorder.emit(0.0, state, plant)

    boundaries = [ev.time for ev in events] + [cfg.t_end]
    t = 0.0
    for event, t_next in zip([*events, None], boundaries):
        if t_next > t:
            state = _integrate_segment(plant, t, t_next, state, cfg, recorder)
            t = t_next
        if event is not None:
            feeder = _apply_event(feeder, event)
            plant = _Plant(feeder, rfc, gains, theta_50, freeze_eps)
            if plant.i_mag(state) <= gains.i_max:
                state = tuple(reset_current_limit(SfcState._make(state)))

    return recorder.build()
