"""Per-unit base system and unit conversions for a single-phase railway grid.

Base quantities:
  S_base (MVA)  — system-wide apparent power base
  V_base (kV)   — line voltage base of the single-phase system
  f_base (Hz)   — fundamental frequency, 50/3 Hz exactly
  Z_base = V_base**2 / S_base  (ohm)

All conversions are linear in the physical quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Frequency base kept rational; a rounded 16.67 Hz drifts reactance conversions.
RAILWAY_FREQUENCY_HZ = 50.0 / 3.0


@dataclass(frozen=True)
class BaseSystem:
    """Per-unit base: apparent power in MVA, line voltage in kV, frequency in Hz."""

    s_base: float = 10.0
    v_base: float = 16.5
    f_base: float = RAILWAY_FREQUENCY_HZ

    def __post_init__(self) -> None:
        if self.s_base <= 0:
            raise ValueError(f"s_base must be positive, got {self.s_base}")
        if self.v_base <= 0:
            raise ValueError(f"v_base must be positive, got {self.v_base}")
        if self.f_base <= 0:
            raise ValueError(f"f_base must be positive, got {self.f_base}")

    @property
    def z_base(self) -> float:
        """Base impedance in ohm: V**2/S (kV**2/MVA gives ohm directly)."""
        return self.v_base**2 / self.s_base

    @property
    def i_base(self) -> float:
        """Base current in kA: S/V."""
        return self.s_base / self.v_base


def impedance_to_pu(z_ohm: complex, base: BaseSystem) -> complex:
    """Convert an impedance in ohm to per-unit."""
    return z_ohm / base.z_base


def impedance_to_ohm(z_pu: complex, base: BaseSystem) -> complex:
    """Convert a per-unit impedance back to ohm."""
    return z_pu * base.z_base


def inductance_to_pu(l_henry: float, base: BaseSystem) -> float:
    """Convert an inductance in H to a per-unit reactance at the base frequency."""
    if l_henry < 0:
        raise ValueError(f"inductance must be non-negative, got {l_henry}")
    return 2.0 * math.pi * base.f_base * l_henry / base.z_base


def rebase_reactance(x_pu: float, s_rated: float, s_base: float) -> float:
    """Move a per-unit reactance from the equipment rating to the system base.

    Same voltage base assumed on both sides, so only the MVA ratio enters.
    """
    if s_rated <= 0:
        raise ValueError(f"s_rated must be positive, got {s_rated}")
    return x_pu * s_base / s_rated


def power_to_pu(p_mw: float, q_mvar: float, base: BaseSystem) -> complex:
    """Convert a complex power in MW/Mvar to per-unit."""
    return complex(p_mw, q_mvar) / base.s_base
