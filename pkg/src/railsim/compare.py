"""Comparison of a simulated trace against a measured RMS recording.

Both series are linearly interpolated onto a shared uniform grid over their
overlap; an optional time-offset search absorbs the unknown sampling phase
of the recording.  Errors are reported overall and per window (pre-fault,
during-fault, post-fault) when the fault interval is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .simulator import TraceSet
from .traceio import MeasuredTrace


class ComparisonError(ValueError):
    """The two series cannot be compared (e.g. no overlap)."""


@dataclass(frozen=True)
class WindowMetrics:
    rmse_u: float
    rmse_i: float
    max_err_u: float
    max_err_i: float
    n_samples: int


@dataclass(frozen=True)
class AlignedPair:
    """Both series on one grid, after the offset was applied to the recording."""

    time: np.ndarray
    sim_u: np.ndarray
    sim_i: np.ndarray
    meas_u: np.ndarray
    meas_i: np.ndarray
    offset: float  # [s] added to the measured time axis


@dataclass(frozen=True)
class ComparisonReport:
    rmse_u: float
    rmse_i: float
    max_err_u: float
    max_err_i: float
    offset: float
    n_samples: int
    windows: dict[str, WindowMetrics] = field(default_factory=dict)

    def to_kv(self) -> str:
        """Flat key-value rendering for machine consumption."""
        lines = [
            f"rmse_u = {self.rmse_u!r}",
            f"rmse_i = {self.rmse_i!r}",
            f"max_err_u = {self.max_err_u!r}",
            f"max_err_i = {self.max_err_i!r}",
            f"offset_s = {self.offset!r}",
            f"n_samples = {self.n_samples}",
        ]
        for name, w in self.windows.items():
            lines.extend(
                [
                    f"{name}.rmse_u = {w.rmse_u!r}",
                    f"{name}.rmse_i = {w.rmse_i!r}",
                    f"{name}.max_err_u = {w.max_err_u!r}",
                    f"{name}.max_err_i = {w.max_err_i!r}",
                    f"{name}.n_samples = {w.n_samples}",
                ]
            )
        return "\n".join(lines) + "\n"


def _grid_step(sim_time: np.ndarray, meas_time: np.ndarray) -> float:
    steps = []
    for t in (sim_time, meas_time):
        if len(t) > 1:
            steps.append(float(np.median(np.diff(t))))
    if not steps:
        raise ComparisonError("series too short to compare")
    return min(steps)


def _interp_pair(
    sim: TraceSet, measured: MeasuredTrace, offset: float, dt: float
) -> AlignedPair | None:
    t_meas = measured.time + offset
    lo = max(sim.time[0], t_meas[0])
    hi = min(sim.time[-1], t_meas[-1])
    if hi - lo < dt:
        return None
    n = int(math.floor((hi - lo) / dt)) + 1
    grid = lo + dt * np.arange(n)
    return AlignedPair(
        time=grid,
        sim_u=np.interp(grid, sim.time, sim.u_mag),
        sim_i=np.interp(grid, sim.time, sim.i_mag),
        meas_u=np.interp(grid, t_meas, measured.u_mag),
        meas_i=np.interp(grid, t_meas, measured.i_mag),
        offset=offset,
    )


def resample_align(
    sim: TraceSet, measured: MeasuredTrace, max_offset: float = 0.0
) -> AlignedPair:
    """Put both series on a common grid, choosing the recording time offset
    within +-max_offset that minimizes the voltage RMSE.

    The returned offset is the shift added to the measured time axis; a
    recording whose timestamps lag the simulation by 40 ms comes back with
    offset ~ +0.04.
    """
    dt = _grid_step(sim.time, measured.time)
    if _interp_pair(sim, measured, 0.0, dt) is None:
        raise ComparisonError("no overlap between the simulated and measured spans")
    if max_offset <= 0.0:
        return _interp_pair(sim, measured, 0.0, dt)

    best: AlignedPair | None = None
    best_rmse = math.inf
    n_shift = int(math.floor(max_offset / dt))
    for k in range(-n_shift, n_shift + 1):
        pair = _interp_pair(sim, measured, k * dt, dt)
        if pair is None:
            continue
        rmse = float(np.sqrt(np.mean((pair.sim_u - pair.meas_u) ** 2)))
        # Strict improvement keeps the smallest |offset| among ties.
        if rmse < best_rmse - 1e-15 or (
            best is not None and rmse <= best_rmse + 1e-15 and abs(k * dt) < abs(best.offset)
        ):
            best, best_rmse = pair, rmse
    if best is None:
        raise ComparisonError("no overlap within the allowed offset range")
    return best


def _window_metrics(pair: AlignedPair, mask: np.ndarray) -> WindowMetrics:
    if not mask.any():
        return WindowMetrics(0.0, 0.0, 0.0, 0.0, 0)
    du = np.abs(pair.sim_u[mask] - pair.meas_u[mask])
    di = np.abs(pair.sim_i[mask] - pair.meas_i[mask])
    return WindowMetrics(
        rmse_u=float(np.sqrt(np.mean(du**2))),
        rmse_i=float(np.sqrt(np.mean(di**2))),
        max_err_u=float(du.max()),
        max_err_i=float(di.max()),
        n_samples=int(mask.sum()),
    )


def compare_traces(
    sim: TraceSet,
    measured: MeasuredTrace,
    max_offset: float = 0.0,
    fault_window: tuple[float, float] | None = None,
) -> ComparisonReport:
    """Error metrics between a simulated trace and a measured recording.

    fault_window = (t_apply, t_clear) splits the overlap into pre/during/post
    segments; without it only the overall metrics are reported.
    """
    pair = resample_align(sim, measured, max_offset)
    overall = _window_metrics(pair, np.ones(len(pair.time), dtype=bool))
    windows: dict[str, WindowMetrics] = {}
    if fault_window is not None:
        t_on, t_off = fault_window
        if t_off <= t_on:
            raise ComparisonError("fault window must have positive duration")
        windows["pre_fault"] = _window_metrics(pair, pair.time < t_on)
        windows["during_fault"] = _window_metrics(
            pair, (pair.time >= t_on) & (pair.time < t_off)
        )
        windows["post_fault"] = _window_metrics(pair, pair.time >= t_off)
    return ComparisonReport(
        rmse_u=overall.rmse_u,
        rmse_i=overall.rmse_i,
        max_err_u=overall.max_err_u,
        max_err_i=overall.max_err_i,
        offset=pair.offset,
        n_samples=overall.n_samples,
        windows=windows,
    )
