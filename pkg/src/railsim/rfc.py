"""Steady-state rotary-converter reference behaviour tracked by the SFC.

A rotary converter shifts the voltage phase by the sum of the motor and
generator load angles, and its terminal voltage droops linearly with
injected reactive power.  The SFC control computes its angle and voltage
references from these laws so that it is interchangeable with a rotary
unit at the point of connection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEGENERACY_THRESHOLD = 1e-9


class DegenerateOperatingPoint(ValueError):
    """A load-angle denominator collapsed; the formula has no meaning there."""


@dataclass(frozen=True)
class RfcParams:
    """Rotary-converter constants used by the reference laws.

    xq_m, xq_g: quadrature reactances of motor and generator sides, with the
    respective unit transformers folded in, on the system base.
    k_u: voltage droop (p.u. voltage per p.u. reactive power).
    u0: no-load voltage magnitude (p.u.).
    """

    xq_m: float
    xq_g: float
    k_u: float = 0.03
    u0: float = 1.0

    def __post_init__(self) -> None:
        if self.xq_m <= 0:
            raise ValueError(f"xq_m must be positive, got {self.xq_m}")
        if self.xq_g <= 0:
            raise ValueError(f"xq_g must be positive, got {self.xq_g}")
        if self.k_u < 0:
            raise ValueError(f"k_u must be non-negative, got {self.k_u}")
        if self.u0 <= 0:
            raise ValueError(f"u0 must be positive, got {self.u0}")


def _load_angle(xq: float, p: float, denom: float) -> float:
    if abs(denom) < DEGENERACY_THRESHOLD:
        raise DegenerateOperatingPoint(
            f"load-angle denominator {denom!r} below {DEGENERACY_THRESHOLD}"
        )
    return math.atan(xq * p / denom)


def phase_shift(
    params: RfcParams,
    p_m: float,
    q_m: float,
    u_m: float,
    p_g: float,
    q_g: float,
    u_g: float,
) -> float:
    """Voltage phase shift across a rotary converter, in railway-side radians.

    Sum of the motor load angle (divided by the pole ratio of three) and the
    generator load angle, each atan(Xq*P / (|U|**2 + Xq*Q)).
    """
    motor = _load_angle(params.xq_m, p_m, u_m**2 + params.xq_m * q_m)
    gen = _load_angle(params.xq_g, p_g, u_g**2 + params.xq_g * q_g)
    return motor / 3.0 + gen


def angle_reference(
    params: RfcParams, theta_50: float, p_g: float, q_g: float, u_g: float
) -> float:
    """Railway-side terminal angle reference from measured quantities.

    theta_50/3 minus the phase shift, with the motor-side denominator set to
    unity (the rectifier feeds from an infinite bus) and the lossless
    assumption letting measured railway-side active power stand in for the
    motor demand.
    """
    motor = math.atan(params.xq_m * p_g)
    gen = _load_angle(params.xq_g, p_g, u_g**2 + params.xq_g * q_g)
    return theta_50 / 3.0 - motor / 3.0 - gen


def voltage_reference(params: RfcParams, q_g: float) -> float:
    """Droop law: no-load voltage minus k_u times injected reactive power."""
    return params.u0 - params.k_u * q_g
