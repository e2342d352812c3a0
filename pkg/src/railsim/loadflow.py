"""Pre-fault operating point: the equilibrium the dynamic model starts from.

The converter holds the droop voltage and the rotary-reference angle at the
connection point while the train draws its specified power.  Because the
network response to the inverter voltage is linear, each iteration maps the
reference phasor back to the inverter voltage directly; only the load
admittance and the measured powers need a fixed-point loop.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, replace

from .control import ControlGains, SfcState
from .network import FeederModel, NortonPort
from .rfc import RfcParams, angle_reference, voltage_reference


class LoadFlowError(RuntimeError):
    """The fixed-point iteration failed to produce an operating point."""


@dataclass(frozen=True)
class LoadFlowResult:
    e_inv0: complex        # inverter internal voltage
    u_poc0: complex        # connection-point voltage
    i_inv0: complex        # inverter current
    u_load0: complex       # train-node voltage
    p_g0: float            # injected active power [p.u.]
    q_g0: float            # injected reactive power [p.u.]
    y_load: complex        # constant train admittance [p.u.]
    controller_init: SfcState  # integrators preloaded so derivatives vanish
    feeder: FeederModel    # feeder with the load admittance attached


def solve_loadflow(
    feeder: FeederModel,
    s_load: complex,
    rfc: RfcParams,
    gains: ControlGains,
    theta_50: float = 0.0,
    tol: float = 1e-10,
    max_iter: int = 100,
    u_load_guess: float | None = None,
) -> LoadFlowResult:
    """Solve for the steady state ahead of a dynamic run.

    s_load is the train demand in per-unit (positive = consumption);
    u_load_guess seeds the load-admittance iteration (default: no-load
    voltage).  The returned controller state holds the equilibrium purely on
    the integrators, so the closed loop starts with zero derivative.  The
    equilibrium is reported even if it needs more inverter voltage than the
    clamp allows; such a point cannot be held dynamically.
    """
    if gains.ki_v <= 0 or gains.ki_a <= 0:
        raise LoadFlowError("integral gains must be positive to hold an equilibrium")
    if u_load_guess is not None and u_load_guess <= 0:
        raise LoadFlowError("u_load_guess must be positive")

    p_g = q_g = 0.0
    u_mag = rfc.u0
    guess = u_load_guess if u_load_guess is not None else rfc.u0
    y_load = s_load.conjugate() / guess**2 if s_load != 0 else 0j
    u_iter: complex | None = None
    residual = float("inf")

    for _ in range(max_iter):
        fdr = replace(feeder, y_load=y_load)
        port = NortonPort(fdr)
        transfer = port(1.0 + 0j).u_poc
        if transfer == 0:
            raise LoadFlowError("connection point is short-circuited")

        mag = voltage_reference(rfc, q_g)
        ang = angle_reference(rfc, theta_50, p_g, q_g, u_mag)
        target = cmath.rect(mag, ang)
        e_inv = target / transfer
        sol = port(e_inv)
        if not cmath.isfinite(sol.u_poc):
            raise LoadFlowError("iteration diverged to a non-finite voltage")

        if u_iter is not None and abs(sol.u_poc - u_iter) < tol:
            # Converged: return the admittance actually used in this solve so
            # the operating point and the feeder are mutually consistent.
            e_mag = abs(e_inv)
            delta = cmath.phase(e_inv)
            init = SfcState(
                int_v=e_mag / gains.ki_v,
                int_a=delta / gains.ki_a,
                int_cl=0.0,
                lag_e=e_mag,
                lag_d=delta,
                filt_de=0.0,
                filt_dd=0.0,
            )
            return LoadFlowResult(
                e_inv0=e_inv,
                u_poc0=sol.u_poc,
                i_inv0=sol.i_inv,
                u_load0=sol.u_load,
                p_g0=sol.p_g,
                q_g0=sol.q_g,
                y_load=y_load,
                controller_init=init,
                feeder=fdr,
            )

        residual = abs(sol.u_poc - u_iter) if u_iter is not None else residual
        u_iter = sol.u_poc
        p_g, q_g = sol.p_g, sol.q_g
        u_mag = abs(sol.u_poc)
        if s_load != 0:
            if abs(sol.u_load) < 1e-6:
                raise LoadFlowError("load-node voltage collapsed; demand infeasible")
            y_load = s_load.conjugate() / abs(sol.u_load) ** 2

    raise LoadFlowError(
        f"no convergence after {max_iter} iterations; last residual {residual:.3e}"
    )
