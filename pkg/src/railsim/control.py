"""SFC inverter control block.

Continuous states (all advanced by the integrator):

  int_v    voltage PI integrator
  int_a    angle PI integrator
  int_cl   current-limit PI integrator (reset to zero whenever the
           measured current is back under the limit)
  lag_e    first-order converter lag on the voltage magnitude command [p.u.]
  lag_d    first-order converter lag on the voltage angle command [rad]
  filt_de  current-limit magnitude correction after its fast filter [p.u.]
  filt_dd  current-limit angle correction after its fast filter [rad]

The voltage and angle PI outputs plus the current-limit corrections form
the inverter command E*exp(j*delta); both channels pass through the same
converter lag t_c, and the magnitude is clamped to [0, e_max].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class IntegrationFault(ArithmeticError):
    """A control input signal was non-finite."""


@dataclass(frozen=True)
class ControlGains:
    """PI gains, time constants and limits of the SFC inverter control."""

    kp_v: float = 0.02   # voltage PI proportional
    ki_v: float = 2.0    # voltage PI integral [1/s]
    kp_a: float = 0.02   # angle PI proportional
    ki_a: float = 2.0    # angle PI integral [1/s]
    kp_cl: float = 12.0  # current-limit PI proportional
    ki_cl: float = 75.0  # current-limit PI integral [1/s]
    t_c: float = 0.050   # converter lag [s]
    t_i: float = 2.0e-5  # current-limit correction filter [s]
    e_max: float = 1.15  # max inverter voltage [p.u.]
    i_max: float = 2.0   # current-limit threshold [p.u.]
    anti_windup_voltage: bool = False
    anti_windup_angle: bool = False

    def __post_init__(self) -> None:
        if self.t_c <= 0 or self.t_i <= 0:
            raise ValueError("time constants must be positive")
        if self.e_max <= 0:
            raise ValueError(f"e_max must be positive, got {self.e_max}")
        if self.i_max <= 0:
            raise ValueError(f"i_max must be positive, got {self.i_max}")
        for name in ("kp_v", "ki_v", "kp_a", "ki_a", "kp_cl", "ki_cl"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


class SfcState(NamedTuple):
    int_v: float = 0.0
    int_a: float = 0.0
    int_cl: float = 0.0
    lag_e: float = 0.0
    lag_d: float = 0.0
    filt_de: float = 0.0
    filt_dd: float = 0.0


class Measurements(NamedTuple):
    """Quantities measured at the railway-side point of connection."""

    u_g: float      # voltage magnitude [p.u.]
    theta_g: float  # voltage angle [rad]
    p_g: float      # injected active power [p.u.]
    q_g: float      # injected reactive power [p.u.]
    i_mag: float    # inverter current magnitude [p.u.]
    gamma: float    # inverter current angle [rad]


class References(NamedTuple):
    theta_ref: float
    u_ref: float


class InverterOutput(NamedTuple):
    e_mag: float
    delta: float
    limiting: bool


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def inverter_output(state: SfcState, gains: ControlGains, limiting: bool = False) -> InverterOutput:
    """Inverter terminal command: lag states with the magnitude clamp enforced."""
    return InverterOutput(_clamp(state.lag_e, 0.0, gains.e_max), state.lag_d, limiting)


def current_limit_update(
    state: SfcState,
    meas: Measurements,
    out: InverterOutput,
    gains: ControlGains,
) -> tuple[float, float, float, bool]:
    """Current-limitation law.

    Returns (d int_cl/dt, filter target for the magnitude correction, filter
    target for the angle correction, limiting flag).  Active only while the
    measured current magnitude exceeds i_max; the PI error is i_max - |I|,
    so the corrections go negative during overcurrent, and they are weighted
    by sin(delta-gamma) and |E|*cos(delta-gamma) — the sensitivities of |I|
    to the magnitude and angle channels (reactances folded into the gains).
    """
    if meas.i_mag <= gains.i_max:
        return 0.0, 0.0, 0.0, False
    err = gains.i_max - meas.i_mag
    pi_out = gains.kp_cl * err + gains.ki_cl * state.int_cl
    rel = out.delta - meas.gamma
    de_target = pi_out * math.sin(rel)
    dd_target = pi_out * out.e_mag * math.cos(rel)
    return err, de_target, dd_target, True


def reset_current_limit(state: SfcState) -> SfcState:
    """Zero the current-limit integrator; the filtered corrections decay on their own."""
    return state._replace(int_cl=0.0)


def control_derivatives(
    state: SfcState,
    meas: Measurements,
    refs: References,
    gains: ControlGains,
) -> tuple[float, float, float, float, float, float, float]:
    """Time derivatives of the control state at one operating point."""
    if not (
        math.isfinite(meas.u_g)
        and math.isfinite(meas.theta_g)
        and math.isfinite(meas.i_mag)
        and math.isfinite(refs.theta_ref)
        and math.isfinite(refs.u_ref)
    ):
        raise IntegrationFault(f"non-finite control input: meas={meas}, refs={refs}")

    err_v = refs.u_ref - meas.u_g
    err_a = refs.theta_ref - meas.theta_g

    e_ref = gains.kp_v * err_v + gains.ki_v * state.int_v
    d_ref = gains.kp_a * err_a + gains.ki_a * state.int_a

    out = inverter_output(state, gains)
    d_int_cl, de_target, dd_target, limiting = current_limit_update(state, meas, out, gains)

    # Conditional anti-windup: hold the voltage integrator while its own PI
    # output sits outside [0, e_max] and the error would push it further out.
    d_int_v = err_v
    if gains.anti_windup_voltage and (
        (e_ref >= gains.e_max and err_v > 0.0) or (e_ref <= 0.0 and err_v < 0.0)
    ):
        d_int_v = 0.0
    # The angle channel has no saturation, so anti_windup_angle never halts it.
    d_int_a = err_a

    e_target = _clamp(e_ref + state.filt_de, 0.0, gains.e_max)
    d_target = d_ref + state.filt_dd

    return (
        d_int_v,
        d_int_a,
        d_int_cl,
        (e_target - state.lag_e) / gains.t_c,
        (d_target - state.lag_d) / gains.t_c,
        (de_target - state.filt_de) / gains.t_i,
        (dd_target - state.filt_dd) / gains.t_i,
    )


def current_from_phasors(e: complex, u: complex, x_t: float, x_f: float) -> complex:
    """Inverter current through the transformer and filter: (E - U) / j(X_T + X_f)."""
    x = x_t + x_f
    if x <= 0:
        raise ValueError(f"total series reactance must be positive, got {x}")
    return (e - u) / complex(0.0, x)
