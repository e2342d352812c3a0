"""Quasi-steady-state feeder network solved as a nodal algebraic system.

The inverter enters as a Norton source: its internal voltage behind the
transformer-plus-filter reactance becomes a current injection with the
matching shunt at the point of connection.  Downstream, the catenary is a
chain of series impedances with constant shunt admittances for the train
load and (when applied) the fault.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class NetworkError(ValueError):
    """Raised when the feeder description cannot be solved."""


@dataclass(frozen=True)
class FeederModel:
    """Single-feeding catenary section seen from the inverter.

    All impedances/admittances in per-unit on the system base; positions in
    km from the point of connection.
    """

    x_t: float                   # transformer reactance
    x_f: float                   # inductive filter reactance
    z_init: complex              # feeder entry impedance
    z_per_km: complex            # catenary impedance per km
    load_pos_km: float           # train position
    y_load: complex = 0j         # constant train admittance
    fault_pos_km: float = 0.0    # fault position
    y_fault: complex = 0j        # fault admittance, 0 when no fault

    def __post_init__(self) -> None:
        if self.x_t + self.x_f <= 0:
            raise ValueError("x_t + x_f must be positive")
        if self.load_pos_km < 0 or self.fault_pos_km < 0:
            raise ValueError("positions must be non-negative")
        if self.y_load.real < -1e-15 or self.y_fault.real < -1e-15:
            raise ValueError("shunt admittances must have non-negative real part")

    @property
    def y_converter(self) -> complex:
        """Norton shunt admittance of the inverter branch: 1/j(x_t + x_f)."""
        return 1.0 / complex(0.0, self.x_t + self.x_f)


@dataclass(frozen=True)
class NetworkSolution:
    u_poc: complex   # voltage at the point of connection
    i_inv: complex   # inverter current into the grid
    u_load: complex  # voltage at the train node
    p_g: float       # active power injected at the point of connection
    q_g: float       # reactive power injected at the point of connection


def set_fault(feeder: FeederModel, z_fault: complex, pos_km: float) -> FeederModel:
    """Attach a shunt fault of impedance z_fault at pos_km down the catenary."""
    if abs(z_fault) <= 0:
        raise NetworkError("bolted (zero-impedance) faults are not representable")
    return replace(feeder, y_fault=1.0 / z_fault, fault_pos_km=pos_km)


def clear_fault(feeder: FeederModel) -> FeederModel:
    """Remove the fault shunt; the matrix rebuilds to the pre-fault one."""
    return replace(feeder, y_fault=0j)


def _track_nodes(feeder: FeederModel) -> list[tuple[float, complex]]:
    """Shunt-carrying catenary nodes as (position, admittance), merged and sorted."""
    nodes: dict[float, complex] = {feeder.load_pos_km: feeder.y_load}
    if feeder.y_fault != 0:
        nodes[feeder.fault_pos_km] = nodes.get(feeder.fault_pos_km, 0j) + feeder.y_fault
    return sorted(nodes.items())


def _topology(feeder: FeederModel) -> tuple[np.ndarray, int]:
    """Nodal admittance matrix and the index of the train node.

    Node 0 is the point of connection carrying the Norton shunt.  Walking
    outward, each track node hangs off the previous one through its series
    impedance; a node joined by zero impedance merges into its neighbor.
    """
    shunts = [feeder.y_converter]
    branches: list[complex] = []
    load_index = 0
    prev_pos = 0.0
    entry_z = feeder.z_init  # applies only to the first span out of node 0
    for pos, shunt in _track_nodes(feeder):
        z = entry_z + feeder.z_per_km * (pos - prev_pos)
        prev_pos = pos
        entry_z = 0j
        if z == 0:
            shunts[-1] += shunt
        else:
            shunts.append(shunt)
            branches.append(z)
        if pos == feeder.load_pos_km:
            load_index = len(shunts) - 1

    n = len(shunts)
    y = np.zeros((n, n), dtype=complex)
    for i, s in enumerate(shunts):
        y[i, i] += s
    for i, z in enumerate(branches):
        yb = 1.0 / z
        y[i, i] += yb
        y[i + 1, i + 1] += yb
        y[i, i + 1] -= yb
        y[i + 1, i] -= yb
    return y, load_index


def build_admittance(feeder: FeederModel) -> np.ndarray:
    """Nodal admittance matrix of the feeder; node 0 is the connection point."""
    y, _ = _topology(feeder)
    return y


def solve(feeder: FeederModel, e_inv: complex) -> NetworkSolution:
    """Solve the nodal equations for an inverter internal voltage e_inv."""
    y, load_index = _topology(feeder)
    y_c = feeder.y_converter
    inj = np.zeros(y.shape[0], dtype=complex)
    inj[0] = e_inv * y_c
    try:
        u = np.linalg.solve(y, inj)
    except np.linalg.LinAlgError as exc:
        raise NetworkError(f"singular admittance matrix: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise NetworkError("non-finite network solution")
    u_poc = complex(u[0])
    i_inv = (e_inv - u_poc) * y_c
    s = u_poc * i_inv.conjugate()
    return NetworkSolution(u_poc, i_inv, complex(u[load_index]), s.real, s.imag)


class NortonPort:
    """Precomputed linear response of a fixed feeder to the inverter voltage.

    The network is linear, so every node voltage is e_inv times a constant;
    factorizing once and reusing the transfer coefficients gives the same
    solution as :func:`solve` without refactoring the matrix at every
    derivative evaluation.
    """

    def __init__(self, feeder: FeederModel):
        y, load_index = _topology(feeder)
        y_c = feeder.y_converter
        rhs = np.zeros(y.shape[0], dtype=complex)
        rhs[0] = y_c
        try:
            col = np.linalg.solve(y, rhs)
        except np.linalg.LinAlgError as exc:
            raise NetworkError(f"singular admittance matrix: {exc}") from exc
        self.feeder = feeder
        self._a_poc = complex(col[0])
        self._a_load = complex(col[load_index])
        self._y_c = y_c

    def __call__(self, e_inv: complex) -> NetworkSolution:
        u_poc = self._a_poc * e_inv
        i_inv = (e_inv - u_poc) * self._y_c
        s = u_poc * i_inv.conjugate()
        return NetworkSolution(u_poc, i_inv, self._a_load * e_inv, s.real, s.imag)
